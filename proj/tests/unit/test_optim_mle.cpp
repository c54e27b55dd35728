#include <gtest/gtest.h>

#include <cmath>

#include "rescav/rng.hpp"
#include "rescav/error.hpp"
#include "rescav/estimator.hpp"
#include "rescav/likelihood.hpp"
#include "rescav/mle.hpp"
#include "rescav/optim.hpp"
#include "rescav/simulation.hpp"

using namespace rescav;

TEST(NelderMead, Rosenbrock) {
  const auto f = [](std::span<const double> x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  const std::vector<double> steps = {0.5, 0.5};
  NelderMeadConfig cfg;
  cfg.max_evals = 20000;
  const auto res = nelder_mead(f, {-1.2, 1.0}, steps, cfg);
  EXPECT_TRUE(res.converged);
  EXPECT_NEAR(res.x[0], 1.0, 1e-5);
  EXPECT_NEAR(res.x[1], 1.0, 1e-5);
  EXPECT_LE(res.evals, cfg.max_evals + 10);
}

TEST(NelderMead, RespectsInfeasibleRegion) {
  // Minimum of the unconstrained quadratic sits at x = -1, outside x > 0.
  const auto f = [](std::span<const double> x) {
    if (x[0] <= 0.0) return HUGE_VAL;
    return std::pow(x[0] + 1.0, 2) + std::pow(x[1] - 2.0, 2);
  };
  const std::vector<double> steps = {0.3, 0.3};
  const auto res = nelder_mead(f, {1.0, 0.0}, steps);
  EXPECT_GT(res.x[0], 0.0);
  EXPECT_LT(res.x[0], 1e-3);
  EXPECT_NEAR(res.x[1], 2.0, 1e-4);
}

TEST(NelderMead, NanTreatedAsInfeasible) {
  const auto f = [](std::span<const double> x) { return x[0] < 0.5 ? std::nan("") : (x[0] - 1.0) * (x[0] - 1.0); };
  const std::vector<double> steps = {0.1};
  const auto res = nelder_mead(f, {2.0}, steps);
  EXPECT_NEAR(res.x[0], 1.0, 1e-5);
}

namespace {

SimulatedSeries dgp_data(std::uint64_t seed, std::size_t n = 1900) {
  DgpSpec d;
  d.n = n;
  d.seed = seed;
  return simulate_dgp(d);
}

}  // namespace

TEST(FitMl, NeverWorseThanInjectedCandidate) {
  const DgpSpec d;
  const auto sim = dgp_data(21);
  for (Family f : {Family::REESCAV_EXP, Family::REESCAV_AR}) {
    const ModelSpec spec{f, 0.01};
    ParamVector truth = map_truth(d, 0.01, f);
    if (has_ar_es(f)) truth[Param::gamma0] = 0.1;
    MleConfig cfg;
    cfg.n_candidates = 1;
    cfg.beta_candidates = 1;
    cfg.seed = 1;
    cfg.extra_candidates = {truth};
    const InitPolicy init = InitPolicy::empirical(sim.returns, 0.01);
    const double ll_truth = composite_loglik(spec, truth, sim.view(), init).total;
    const MleResult res = fit_ml(spec, sim.view(), cfg);
    EXPECT_GE(res.loglik.total, ll_truth - 1e-9);
    EXPECT_GE(res.best_candidate_loglik, ll_truth - 1e-9);
    EXPECT_TRUE(in_support(res.params));
  }
}

TEST(FitMl, AllZeroReturnsHaveNoFeasibleCandidate) {
  const std::vector<double> r(300, 0.0);
  MleConfig cfg;
  cfg.n_candidates = 50;
  cfg.beta_candidates = 20;
  cfg.seed = 2;
  EXPECT_THROW(fit_ml(ModelSpec{Family::ESCAV_EXP, 0.01}, SeriesView{r, {}}, cfg), NumericalError);
}

TEST(FitMl, Deterministic) {
  const auto sim = dgp_data(22, 600);
  MleConfig cfg;
  cfg.n_candidates = 300;
  cfg.beta_candidates = 100;
  cfg.seed = 9;
  const ModelSpec spec{Family::ESCAV_AR, 0.025};
  const auto a = fit_ml(spec, sim.view(), cfg);
  cfg.threads = 3;
  const auto b = fit_ml(spec, sim.view(), cfg);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.loglik.total, b.loglik.total);
}

TEST(FitQuantileEquation, ImprovesOnCheckLoss) {
  const auto sim = dgp_data(23);
  const ModelSpec spec{Family::REESCAV_EXP, 0.01};
  const InitPolicy init = InitPolicy::empirical(sim.returns, 0.01);
  const ParamVector b = fit_quantile_equation(spec, sim.view(), init, 200, 4, 4000);
  EXPECT_LT(std::fabs(b[Param::beta2]), 1.0);
  EXPECT_EQ(b[Param::xi], 0.0);
}

// Bias and precision of the ML one-step VaR for ES-CAViaR-Exp on generator data.
TEST(FitMl, EscavExpVarForecastRecovery) {
  const DgpSpec d;
  double sum_err = 0.0, sum_sq = 0.0, sum_est = 0.0, sum_true = 0.0;
  const int reps = 50;
  for (int rep = 0; rep < reps; ++rep) {
    DgpSpec dr = d;
    dr.seed = derive_seed(777, static_cast<std::uint64_t>(rep));
    const auto sim = simulate_dgp(dr);
    const ModelSpec spec{Family::ESCAV_EXP, 0.01};
    MleConfig cfg;
    cfg.seed = derive_seed(778, static_cast<std::uint64_t>(rep));
    const auto fit = fit_ml(spec, sim.view(), cfg);
    const auto fo = filter(spec, fit.params, sim.view(), InitPolicy::empirical(sim.returns, 0.01));
    const double est = forecast_one(spec, fit.params, sim.view(), fo).var;
    const double truth = sim.sqrt_h_next * z_alpha(0.01);
    sum_est += est;
    sum_true += truth;
    sum_err += est - truth;
    sum_sq += (est - truth) * (est - truth);
  }
  const double rmse = std::sqrt(sum_sq / reps);
  EXPECT_NEAR(sum_est / reps, -1.24, 0.08) << "true mean " << sum_true / reps;
  EXPECT_LE(rmse, 0.25);  // misspecified driver: looser than the realized families
  EXPECT_LT(std::fabs(sum_err / reps), 0.05);
}

TEST(MlEstimator, WarmStartUsesPreviousFit) {
  const auto sim = dgp_data(24, 800);
  MleConfig cfg;
  cfg.n_candidates = 200;
  cfg.beta_candidates = 100;
  const MlEstimator est(cfg, true, 50);
  EXPECT_TRUE(est.uses_warm_start());
  const ModelSpec spec{Family::REESCAV_EXP, 0.01};
  const Estimate first = est.fit(spec, sim.view(), 1, std::nullopt);
  const Estimate again = est.fit(spec, sim.view(), 2, first.params);
  const InitPolicy init = InitPolicy::empirical(sim.returns, 0.01);
  EXPECT_GE(composite_loglik(spec, again.params, sim.view(), init).total,
            composite_loglik(spec, first.params, sim.view(), init).total - 1e-9);
}
