#include <gtest/gtest.h>

#include <cmath>

#include "oracle.hpp"
#include "rescav/error.hpp"
#include "rescav/model.hpp"
#include "rescav/simulation.hpp"

using namespace rescav;

namespace {

SimulatedSeries sample_data(std::size_t n, std::uint64_t seed) {
  DgpSpec d;
  d.n = n;
  d.seed = seed;
  return simulate_dgp(d);
}

}  // namespace

TEST(Family, NamesRoundTrip) {
  for (Family f : kAllFamilies) EXPECT_EQ(parse_family(to_string(f)), f);
  EXPECT_EQ(to_string(Family::REESCAV_EXP), "re-es-caviar-exp");
  EXPECT_THROW(parse_family("caviar"), InvalidArgument);
}

TEST(Params, ActiveCountsAndFlatRoundTrip) {
  EXPECT_EQ(active_params(Family::ESCAV_AR).size(), 6u);
  EXPECT_EQ(active_params(Family::ESCAV_EXP).size(), 4u);
  EXPECT_EQ(active_params(Family::REESCAV_AR).size(), 11u);
  EXPECT_EQ(active_params(Family::REESCAV_EXP).size(), 9u);
  Rng rng(1);
  for (Family f : kAllFamilies) {
    const ParamVector p = oracle::random_params(f, rng);
    EXPECT_EQ(ParamVector::from_flat(f, p.to_flat()), p);
  }
  for (std::size_t i = 0; i < kParamCount; ++i) {
    EXPECT_EQ(parse_param(param_name(static_cast<Param>(i))), static_cast<Param>(i));
  }
}

TEST(ModelSpec, AlphaRange) {
  EXPECT_NO_THROW((ModelSpec{Family::ESCAV_EXP, 0.01}.validate()));
  EXPECT_THROW((ModelSpec{Family::ESCAV_EXP, 0.0}.validate()), InvalidArgument);
  EXPECT_THROW((ModelSpec{Family::ESCAV_EXP, 0.5}.validate()), InvalidArgument);
}

TEST(Support, Constraints) {
  Rng rng(2);
  ParamVector p = oracle::random_params(Family::REESCAV_AR, rng);
  EXPECT_TRUE(in_support(p));
  EXPECT_FALSE(constraint_violation(p).has_value());
  ParamVector q = p;
  q[Param::gamma1] = -0.01;
  EXPECT_FALSE(in_support(q));
  EXPECT_TRUE(constraint_violation(q).has_value());
  q = p;
  q[Param::sigma_u] = 0.0;
  EXPECT_FALSE(in_support(q));
  q = p;
  q[Param::beta2] = 0.99;
  q[Param::beta1] = 0.2;
  q[Param::phi] = 0.5;
  EXPECT_FALSE(in_support(q));  // beta2 + beta1 phi = 1.09
  q = p;
  q[Param::beta2] = 1.0;
  EXPECT_FALSE(in_support(q));
  q = p;
  q[Param::xi] = std::nan("");
  EXPECT_FALSE(in_support(q));
  ParamVector e = oracle::random_params(Family::ESCAV_EXP, rng);
  e[Param::gamma0] = -5.0;  // unrestricted for EXP
  EXPECT_TRUE(in_support(e));
}

TEST(EmpiricalQuantile, Type7Interpolation) {
  const std::vector<double> v = {10, 1, 9, 2, 8, 3, 7, 4, 6, 5};
  EXPECT_DOUBLE_EQ(empirical_quantile(v, 0.25), 3.25);  // numpy.quantile default
  EXPECT_DOUBLE_EQ(empirical_quantile(v, 0.01), 1.09);
  EXPECT_DOUBLE_EQ(empirical_quantile(v, 0.5), 5.5);
}

TEST(Filter, MatchesLoopOracleAllFamilies) {
  const auto sim = sample_data(200, 7);
  Rng rng(3);
  for (Family f : kAllFamilies) {
    const ModelSpec spec{f, 0.01};
    for (int k = 0; k < 100; ++k) {
      const ParamVector p = oracle::random_params(f, rng);
      const InitPolicy init = InitPolicy::empirical(sim.returns, spec.alpha);
      const FilterOutput fo = filter(spec, p, sim.view(), init);
      const oracle::Paths ref = oracle::filter(spec, p, sim.returns, sim.measures, init.q1);
      ASSERT_EQ(fo.q.size(), 200u);
      for (std::size_t t = 0; t < 200; ++t) {
        ASSERT_NEAR(fo.q[t], ref.q[t], 1e-12 * std::max(1.0, std::fabs(ref.q[t])));
        ASSERT_NEAR(fo.es[t], ref.es[t], 1e-12 * std::max(1.0, std::fabs(ref.es[t])));
        if (is_realized(f)) ASSERT_NEAR(fo.u[t], ref.u[t], 1e-12 * std::max(1.0, std::fabs(ref.u[t])));
      }
      if (is_realized(f)) EXPECT_NEAR(fo.eps2bar, ref.eps2bar, 1e-12 * ref.eps2bar);
    }
  }
}

TEST(Filter, ExpWithZeroGammaDoublesQ) {
  const auto sim = sample_data(100, 8);
  Rng rng(4);
  ParamVector p = oracle::random_params(Family::ESCAV_EXP, rng);
  p[Param::gamma0] = 0.0;
  const ModelSpec spec{Family::ESCAV_EXP, 0.01};
  const auto fo = filter(spec, p, sim.view(), InitPolicy::empirical(sim.returns, 0.01));
  for (std::size_t t = 0; t < fo.q.size(); ++t) EXPECT_EQ(fo.es[t], 2.0 * fo.q[t]);
}

TEST(Filter, ArWithOnlyGamma0HasConstantOffset) {
  const auto sim = sample_data(300, 9);
  Rng rng(5);
  ParamVector p = oracle::random_params(Family::REESCAV_AR, rng);
  p[Param::gamma0] = 0.3;
  p[Param::gamma1] = 0.0;
  p[Param::gamma2] = 0.0;
  const ModelSpec spec{Family::REESCAV_AR, 0.05};
  const auto fo = filter(spec, p, sim.view(), InitPolicy::empirical(sim.returns, 0.05));
  for (std::size_t t = 0; t < fo.q.size(); ++t) EXPECT_NEAR(fo.es[t], fo.q[t] - 0.3, 1e-15);
}

TEST(Filter, NoCrossingAndNonNegativeOffset) {
  const auto sim = sample_data(500, 10);
  Rng rng(6);
  for (Family f : kAllFamilies) {
    const ModelSpec spec{f, 0.01};
    for (int k = 0; k < 20; ++k) {
      const auto fo = filter(spec, oracle::random_params(f, rng), sim.view(), InitPolicy::empirical(sim.returns, 0.01));
      for (std::size_t t = 0; t < fo.q.size(); ++t) {
        if (fo.q[t] < 0.0) ASSERT_LE(fo.es[t], fo.q[t]);
        if (has_ar_es(f)) ASSERT_GE(fo.x[t], 0.0);
      }
    }
  }
}

TEST(Filter, MeasurementResidualReconstructsX) {
  const auto sim = sample_data(400, 11);
  Rng rng(7);
  const ModelSpec spec{Family::REESCAV_EXP, 0.01};
  const ParamVector p = oracle::random_params(spec.family, rng);
  const auto fo = filter(spec, p, sim.view(), InitPolicy::empirical(sim.returns, 0.01));
  for (std::size_t t = 0; t < fo.q.size(); ++t) {
    const double e = sim.returns[t] / fo.q[t];
    const double x = p[Param::xi] + p[Param::phi] * std::fabs(fo.q[t]) + p[Param::tau1] * e +
                     p[Param::tau2] * (e * e - fo.eps2bar) + fo.u[t];
    EXPECT_NEAR(x, sim.measures[t], 1e-12);
  }
}

TEST(Filter, DegenerateQuantileThrows) {
  const auto sim = sample_data(50, 12);
  ParamVector p;
  p.family = Family::ESCAV_EXP;
  const ModelSpec spec{Family::ESCAV_EXP, 0.01};
  EXPECT_THROW(filter(spec, p, sim.view(), InitPolicy::empirical(sim.returns, 0.01)), DegenerateQuantile);
  p[Param::beta2] = 0.9;
  EXPECT_THROW(filter(spec, p, sim.view(), InitPolicy{0.0, std::nullopt}), DegenerateQuantile);
}

TEST(Filter, Deterministic) {
  const auto sim = sample_data(300, 13);
  Rng rng(8);
  const ModelSpec spec{Family::REESCAV_AR, 0.01};
  const ParamVector p = oracle::random_params(spec.family, rng);
  const InitPolicy init = InitPolicy::empirical(sim.returns, 0.01);
  const auto a = filter(spec, p, sim.view(), init);
  const auto b = filter(spec, p, sim.view(), init);
  EXPECT_EQ(a.q, b.q);
  EXPECT_EQ(a.es, b.es);
  EXPECT_EQ(a.u, b.u);
}

// Q_{n+1} and ES_{n+1} do not depend on day n+1, so filtering one extra day
// must reproduce the forecast.
TEST(Forecast, EqualsFilterOnExtendedData) {
  const auto sim = sample_data(301, 14);
  Rng rng(9);
  for (Family f : kAllFamilies) {
    const ModelSpec spec{f, 0.025};
    for (int k = 0; k < 10; ++k) {
      const ParamVector p = oracle::random_params(f, rng);
      const InitPolicy init = InitPolicy::empirical(sim.returns, spec.alpha);
      const SeriesView full = sim.view();
      const SeriesView in = full.window(0, 300);
      const auto fo = filter(spec, p, in, init);
      const RiskForecast fc = forecast_one(spec, p, in, fo);
      const auto ext = filter(spec, p, full, init);
      EXPECT_NEAR(fc.var, ext.q[300], 1e-13);
      EXPECT_NEAR(fc.es, ext.es[300], 1e-13);
    }
  }
}

TEST(Forecast, ConstantDataFixedPoint) {
  const double c = 0.8;
  std::vector<double> r(50);
  for (std::size_t t = 0; t < r.size(); ++t) r[t] = t % 2 == 0 ? c : -c;
  ParamVector p;
  p.family = Family::ESCAV_EXP;
  p[Param::beta0] = -0.05;
  p[Param::beta1] = -0.2;
  p[Param::beta2] = 0.8;
  p[Param::gamma0] = -1.5;
  const double qstar = (p[Param::beta0] + p[Param::beta1] * c) / (1.0 - p[Param::beta2]);
  const ModelSpec spec{Family::ESCAV_EXP, 0.01};
  const SeriesView v{r, {}};
  const auto fo = filter(spec, p, v, InitPolicy{qstar, std::nullopt});
  for (double q : fo.q) EXPECT_NEAR(q, qstar, 1e-14);
  const auto fc = forecast_one(spec, p, v, fo);
  EXPECT_NEAR(fc.var, qstar, 1e-14);
  EXPECT_NEAR(fc.es, (1.0 + std::exp(-1.5)) * qstar, 1e-14);
  p[Param::gamma0] = -50.0;
  EXPECT_NEAR(forecast_one(spec, p, v, filter(spec, p, v, InitPolicy{qstar, std::nullopt})).es, qstar, 1e-14);
}
