#include <gtest/gtest.h>

#include <cmath>

#include "rescav/rng.hpp"
#include "rescav/error.hpp"
#include "rescav/simulation.hpp"

using namespace rescav;

TEST(Dgp, ZeroShocksConvergeToFixedPoint) {
  DgpSpec d;
  d.zero_shocks = true;
  d.n = 1000;
  EXPECT_NEAR(d.fixed_point(), 0.5, 1e-15);
  for (double start : {0.05, 0.5, 2.0}) {
    d.sqrt_h1 = start;
    const auto s = simulate_dgp(d);
    EXPECT_EQ(s.sqrt_h.front(), start);
    EXPECT_NEAR(s.sqrt_h.back(), 0.5, 1e-12);
    for (double r : s.returns) EXPECT_EQ(r, 0.0);
  }
}

TEST(Dgp, RecursionHoldsExactly) {
  DgpSpec d;
  d.seed = 3;
  d.shifts = {{500, 0.04}, {1200, 0.01}};
  const auto s = simulate_dgp(d);
  ASSERT_EQ(s.returns.size(), 1900u);
  for (std::size_t t = 1; t < s.sqrt_h.size(); ++t) {
    const double omega = t >= 1200 ? 0.01 : (t >= 500 ? 0.04 : 0.02);
    ASSERT_EQ(s.sqrt_h[t], omega + d.a * s.measures[t - 1] + d.b * s.sqrt_h[t - 1]);
  }
  EXPECT_EQ(s.sqrt_h_next, 0.01 + d.a * s.measures.back() + d.b * s.sqrt_h.back());
  for (double x : s.measures) ASSERT_GT(x, 0.0);
}

TEST(Dgp, DatesAreWeekdays) {
  DgpSpec d;
  d.n = 30;
  d.seed = 4;
  const auto s = simulate_dgp(d);
  EXPECT_EQ(s.dates.front().to_string(), "2000-01-03");
  for (std::size_t t = 0; t < s.dates.size(); ++t) {
    EXPECT_LT(s.dates[t].weekday(), 5u);
    if (t > 0) {
      EXPECT_EQ(s.dates[t], s.dates[t - 1].next_weekday());
    }
  }
  EXPECT_EQ(s.records().size(), 30u);
}

TEST(Dgp, Deterministic) {
  DgpSpec d;
  d.seed = 5;
  const auto a = simulate_dgp(d), b = simulate_dgp(d);
  EXPECT_EQ(a.returns, b.returns);
  EXPECT_EQ(a.measures, b.measures);
  d.seed = 6;
  EXPECT_NE(simulate_dgp(d).returns, a.returns);
}

TEST(Dgp, LongRunMeanNearFixedPoint) {
  DgpSpec d;
  d.seed = 7;
  d.n = 100000;
  const auto s = simulate_dgp(d);
  double m = 0.0;
  for (double v : s.sqrt_h) m += v;
  m /= static_cast<double>(s.sqrt_h.size());
  // Redrawing until X_t > 0 truncates the measure from below and lifts the mean.
  EXPECT_GT(m, d.fixed_point());
  EXPECT_LT(m, 1.1 * d.fixed_point());
}

TEST(Dgp, Validation) {
  DgpSpec d;
  d.sigma_u = 0.0;
  EXPECT_THROW(simulate_dgp(d), InvalidArgument);
  d = DgpSpec{};
  d.b = 0.95;
  EXPECT_THROW(simulate_dgp(d), InvalidArgument);
  d = DgpSpec{};
  d.sqrt_h1 = -1.0;
  EXPECT_THROW(simulate_dgp(d), InvalidArgument);
}

// Reference true parameters at alpha = 0.01.
TEST(Truth, MapTruthMatchesReference) {
  const ParamVector p = map_truth(DgpSpec{}, 0.01, Family::REESCAV_EXP);
  EXPECT_NEAR(p[Param::beta0], -0.0465, 5e-5);
  EXPECT_NEAR(p[Param::beta1], -0.2326, 5e-5);
  EXPECT_NEAR(p[Param::beta2], 0.8500, 5e-5);
  EXPECT_NEAR(p[Param::xi], 0.1000, 5e-5);
  EXPECT_NEAR(p[Param::phi], 0.3869, 5e-5);
  EXPECT_NEAR(p[Param::tau1], 0.0465, 5e-5);
  EXPECT_NEAR(p[Param::tau2], 0.1082, 5e-5);
  EXPECT_NEAR(p[Param::sigma_u], 0.3000, 5e-5);
  EXPECT_THROW(map_truth(DgpSpec{}, 0.01, Family::ESCAV_EXP), InvalidArgument);
}

TEST(Truth, GaussianRatioAndGamma0) {
  // phi(z)/(alpha |z|) with scipy's z(0.01) and phi(z).
  EXPECT_NEAR(gaussian_es_var_ratio(0.01), 0.02665214220345808 / (0.01 * 2.3263478740408408), 1e-14);
  EXPECT_NEAR(gaussian_es_var_ratio(0.01), 1.1456645199, 1e-9);
  EXPECT_NEAR(true_gamma0_exp(0.01), std::log(1.1456645199483 - 1.0), 1e-9);
}

TEST(Truth, PathsHaveConstantRatio) {
  DgpSpec d;
  d.seed = 8;
  const auto sim = simulate_dgp(d);
  const auto tr = make_truth(d, sim, 0.01, Family::REESCAV_EXP, 0, 1);
  const double ratio = gaussian_es_var_ratio(0.01);
  for (std::size_t t = 0; t < tr.var.size(); ++t) ASSERT_NEAR(tr.es[t] / tr.var[t], ratio, 1e-12);
  EXPECT_NEAR(tr.next.var, sim.sqrt_h_next * z_alpha(0.01), 1e-15);
  EXPECT_FALSE(tr.gamma_ar.has_value());
}

TEST(Truth, GammaSearch) {
  DgpSpec d;
  d.seed = 9;
  const auto sim = simulate_dgp(d);
  const auto tr = make_truth(d, sim, 0.01, Family::REESCAV_EXP, 0, 1);
  const std::array<double, 3> only{0.2, 0.3, 0.4};
  const GammaFit one = true_gamma_ar(sim.returns, tr.var, 0.01, 0, 1, std::span(&only, 1));
  EXPECT_EQ(one.gamma, only);
  const GammaFit single = true_gamma_ar(sim.returns, tr.var, 0.01, 1, 5);
  EXPECT_EQ(single.loglik, ar_offset_loglik(sim.returns, tr.var, 0.01, single.gamma));
  const double ratio = gaussian_es_var_ratio(0.01);
  double mq = 0.0;
  for (double v : tr.var) mq += v;
  mq /= static_cast<double>(tr.var.size());
  const std::array<double, 3> constant{(1.0 - ratio) * mq, 0.0, 0.0};
  const GammaFit many = true_gamma_ar(sim.returns, tr.var, 0.01, 2000, 6, std::span(&constant, 1));
  EXPECT_GE(many.loglik, ar_offset_loglik(sim.returns, tr.var, 0.01, constant));
}

// Reference averages (0.1024, 0.1869, 0.2752) with sds
// (0.0669, 0.2198, 0.2554) across replications; 20 datasets here.
TEST(Truth, ArGammaAveragesNearReference) {
  const int reps = 20;
  std::array<double, 3> mean{};
  for (int r = 0; r < reps; ++r) {
    DgpSpec d;
    d.seed = derive_seed(2024, static_cast<std::uint64_t>(r));
    const auto sim = simulate_dgp(d);
    const auto tr = make_truth(d, sim, 0.01, Family::REESCAV_AR, 5000, derive_seed(d.seed, 7));
    for (int k = 0; k < 3; ++k) mean[k] += tr.gamma_ar->gamma[k] / reps;
  }
  const double sdm = 3.0 / std::sqrt(static_cast<double>(reps));
  EXPECT_NEAR(mean[0], 0.1024, 0.0669 * sdm);
  EXPECT_NEAR(mean[1], 0.1869, 0.2198 * sdm);
  EXPECT_NEAR(mean[2], 0.2752, 0.2554 * sdm);
}

TEST(Study, TruthStubHasNoError) {
  StudyConfig cfg;
  cfg.reps = 1;
  cfg.seed = 10;
  cfg.family = Family::REESCAV_EXP;
  DgpSpec d = cfg.dgp;
  d.seed = derive_seed(cfg.seed, 0);
  const FixedEstimator stub(map_truth(cfg.dgp, cfg.alpha, cfg.family));
  const StudyResult res = replication_study(cfg, stub);
  ASSERT_EQ(res.failures, 0u);
  for (const auto& row : res.rows) {
    EXPECT_NEAR(row.mean, row.truth, 1e-9) << row.name;
    EXPECT_NEAR(row.rmse, 0.0, 1e-9) << row.name;
  }
}
