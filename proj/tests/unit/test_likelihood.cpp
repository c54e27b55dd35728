#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracle.hpp"
#include "rescav/error.hpp"
#include "rescav/likelihood.hpp"
#include "rescav/simulation.hpp"

using namespace rescav;

namespace {

struct Tuple {
  std::vector<double> r, q, es;
};

Tuple random_tuple(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  NormalSampler z;
  Tuple t;
  for (std::size_t i = 0; i < n; ++i) {
    t.r.push_back(1.5 * z(rng));
    t.q.push_back(uniform(rng, -3.0, 0.5));
    t.es.push_back(std::min(t.q.back(), 0.0) - uniform(rng, 1e-3, 1.5));
  }
  return t;
}

}  // namespace

TEST(AlLoglik, SingleObservation) {
  const std::vector<double> r = {-2.0}, q = {-1.5}, es = {-2.5};
  // log(0.99) - log(2.5) + (-0.5)(0.01 - 1)/(0.01 * -2.5)
  const double hand = std::log(0.99) - std::log(2.5) + (-0.5 * -0.99) / (-0.025);
  EXPECT_NEAR(hand, -20.726341067727653, 1e-12);
  EXPECT_NEAR(al_loglik(r, q, es, 0.01), hand, 1e-13);
}

TEST(AlLoglik, ReturnsOnQuantile) {
  const Tuple t = random_tuple(50, 1);
  double expect = 0.0;
  for (double e : t.es) expect += std::log((0.01 - 1.0) / e);
  EXPECT_NEAR(al_loglik(t.q, t.q, t.es, 0.01), expect, 1e-11);
}

TEST(AlLoglik, MatchesOracle) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Tuple t = random_tuple(500, 100 + s);
    const double ref = oracle::al_loglik(t.r, t.q, t.es, 0.025);
    EXPECT_NEAR(al_loglik(t.r, t.q, t.es, 0.025), ref, 1e-10 * std::max(1.0, std::fabs(ref)));
  }
}

TEST(AlLoglik, NonNegativeEsIsMinusInfinity) {
  Tuple t = random_tuple(20, 2);
  t.es[7] = 0.0;
  EXPECT_EQ(al_loglik(t.r, t.q, t.es, 0.01), kMinusInf);
  t.es[7] = 0.3;
  EXPECT_EQ(al_loglik(t.r, t.q, t.es, 0.01), kMinusInf);
  EXPECT_FALSE(es_valid(t.es));
}

TEST(AlLoglik, ScalingEsChangesValue) {
  const Tuple t = random_tuple(100, 3);
  std::vector<double> scaled = t.es;
  for (double& e : scaled) e *= 1.3;
  EXPECT_NE(al_loglik(t.r, t.q, t.es, 0.01), al_loglik(t.r, t.q, scaled, 0.01));
}

// With Q fixed and a constant ES = e, l(e) = n log(1-a) - n log(-e) + S/(a e),
// S = sum (r-Q)(a - 1{r<=Q}) >= 0, maximized at e* = -S/(a n).
TEST(AlLoglik, ConstantEsMaximizer) {
  const double alpha = 0.05;
  const Tuple t = random_tuple(400, 4);
  double s = 0.0;
  for (std::size_t i = 0; i < t.r.size(); ++i) s += (t.r[i] - t.q[i]) * (alpha - (t.r[i] <= t.q[i] ? 1.0 : 0.0));
  ASSERT_GT(s, 0.0);
  const double analytic = -s / (alpha * static_cast<double>(t.r.size()));
  double best_e = 0.0, best = kMinusInf;
  for (int k = 1; k <= 200000; ++k) {
    const double e = -1e-4 * k;
    const std::vector<double> es(t.r.size(), e);
    const double l = al_loglik(t.r, t.q, es, alpha);
    if (l > best) {
      best = l;
      best_e = e;
    }
  }
  EXPECT_NEAR(best_e, analytic, 1e-4);
}

TEST(MeasurementLoglik, GaussianAtMode) {
  EXPECT_NEAR(measurement_loglik(0.0, 250, 1.0), -125.0 * std::log(2.0 * std::numbers::pi), 1e-12);
  const double sigma = 0.4, ss = 3.7;
  const double n = 30;
  EXPECT_NEAR(measurement_loglik(ss, 30, sigma),
              -0.5 * (n * std::log(2.0 * std::numbers::pi) + n * std::log(sigma * sigma) + ss / (sigma * sigma)),
              1e-12);
}

TEST(Composite, EscavHasNoMeasurementPart) {
  DgpSpec d;
  d.n = 300;
  d.seed = 5;
  const auto sim = simulate_dgp(d);
  Rng rng(5);
  const ModelSpec spec{Family::ESCAV_AR, 0.01};
  const ParamVector p = oracle::random_params(spec.family, rng);
  const auto ll = composite_loglik(spec, p, sim.view(), InitPolicy::empirical(sim.returns, 0.01));
  EXPECT_EQ(ll.measurement_part, 0.0);
  EXPECT_EQ(ll.total, ll.al_part);
}

TEST(Composite, TrueParamsMatchOracleLoop) {
  DgpSpec d;
  d.n = 1900;
  d.seed = 6;
  const auto sim = simulate_dgp(d);
  const ModelSpec spec{Family::REESCAV_AR, 0.01};
  ParamVector p = map_truth(d, 0.01, spec.family);
  p[Param::gamma0] = 0.12;
  p[Param::gamma1] = 0.02;
  p[Param::gamma2] = 0.11;
  const InitPolicy init = InitPolicy::empirical(sim.returns, 0.01);
  const auto ll = composite_loglik(spec, p, sim.view(), init);
  const auto ref = oracle::filter(spec, p, sim.returns, sim.measures, init.q1);
  double uss = 0.0;
  for (double u : ref.u) uss += u * u;
  const double n = 1900.0, s2 = p[Param::sigma_u] * p[Param::sigma_u];
  const double meas = -0.5 * (n * std::log(2.0 * std::numbers::pi) + n * std::log(s2) + uss / s2);
  const double al = oracle::al_loglik(sim.returns, ref.q, ref.es, 0.01);
  EXPECT_NEAR(ll.al_part, al, 1e-10 * std::fabs(al));
  EXPECT_NEAR(ll.measurement_part, meas, 1e-10 * std::fabs(meas));
  EXPECT_NEAR(ll.total, al + meas, 1e-10 * std::fabs(al + meas));
}

// The measurement part is smooth in (xi, phi, tau1, tau2, sigma_u) with the Q path fixed.
TEST(Composite, MeasurementGradientMatchesFiniteDifference) {
  DgpSpec d;
  d.n = 500;
  d.seed = 7;
  const auto sim = simulate_dgp(d);
  Rng rng(7);
  const ModelSpec spec{Family::REESCAV_EXP, 0.01};
  const ParamVector p = oracle::random_params(spec.family, rng);
  const InitPolicy init = InitPolicy::empirical(sim.returns, 0.01);
  const auto ref = oracle::filter(spec, p, sim.returns, sim.measures, init.q1);
  const double s = p[Param::sigma_u], s2 = s * s;
  double g_xi = 0, g_phi = 0, g_t1 = 0, g_t2 = 0, uss = 0;
  for (std::size_t t = 0; t < ref.u.size(); ++t) {
    const double e = sim.returns[t] / ref.q[t];
    g_xi += ref.u[t] / s2;
    g_phi += ref.u[t] * std::fabs(ref.q[t]) / s2;
    g_t1 += ref.u[t] * e / s2;
    g_t2 += ref.u[t] * (e * e - ref.eps2bar) / s2;
    uss += ref.u[t] * ref.u[t];
  }
  const double g_sigma = -static_cast<double>(ref.u.size()) / s + uss / (s2 * s);
  const std::vector<std::pair<Param, double>> grads = {
      {Param::xi, g_xi}, {Param::phi, g_phi}, {Param::tau1, g_t1}, {Param::tau2, g_t2}, {Param::sigma_u, g_sigma}};
  for (const auto& [param, g] : grads) {
    const double h = 1e-6;
    ParamVector up = p, dn = p;
    up[param] += h;
    dn[param] -= h;
    const double fd = (composite_loglik(spec, up, sim.view(), init).measurement_part -
                       composite_loglik(spec, dn, sim.view(), init).measurement_part) /
                      (2.0 * h);
    EXPECT_NEAR(fd, g, 1e-5 * std::max(1.0, std::fabs(g))) << param_name(param);
  }
}

TEST(Composite, InvalidPointsAtBoundary) {
  DgpSpec d;
  d.n = 200;
  d.seed = 8;
  const auto sim = simulate_dgp(d);
  Rng rng(8);
  const ModelSpec spec{Family::REESCAV_EXP, 0.01};
  ParamVector p = oracle::random_params(spec.family, rng);
  const InitPolicy init = InitPolicy::empirical(sim.returns, 0.01);
  FilterOutput scratch;
  EXPECT_TRUE(std::isfinite(loglik_or_minus_inf(spec, p, sim.view(), init, scratch)));
  p[Param::sigma_u] = -0.1;
  EXPECT_EQ(loglik_or_minus_inf(spec, p, sim.view(), init, scratch), kMinusInf);
  EXPECT_THROW(composite_loglik(spec, p, sim.view(), init), InvalidArgument);
  ParamVector z;
  z.family = spec.family;
  z[Param::sigma_u] = 0.3;
  EXPECT_EQ(loglik_or_minus_inf(spec, z, sim.view(), init, scratch), kMinusInf);
}
