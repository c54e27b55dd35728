#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rescav/data_io.hpp"
#include "rescav/estimator.hpp"
#include "rescav/model.hpp"

namespace rescav {

// From `start` (day index) on, the sqrt(h) intercept becomes `omega`.
struct RegimeShift {
  std::size_t start = 0;
  double omega = 0.0;
};

// Realized-GARCH data generator:
//   r_t = sqrt(h_t) e_t,  sqrt(h_t) = omega + a X_{t-1} + b sqrt(h_{t-1}),
//   X_t = xi + phi sqrt(h_t) + tau1 e_t + tau2 (e_t^2 - 1) + u_t,
//   e_t ~ N(0,1), u_t ~ N(0, sigma_u^2). Shocks are redrawn until X_t > 0.
struct DgpSpec {
  double omega = 0.02;
  double a = 0.10;
  double b = 0.85;
  double xi = 0.1;
  double phi = 0.9;
  double tau1 = -0.02;
  double tau2 = 0.02;
  double sigma_u = 0.3;
  std::size_t n = 1900;
  std::uint64_t seed = 0;
  std::vector<RegimeShift> shifts;
  std::optional<double> sqrt_h1;  // default: fixed_point()
  // Test hook: every shock term (including e_t^2 - 1) is zero, so sqrt(h)
  // follows the deterministic recursion towards fixed_point().
  bool zero_shocks = false;

  void validate() const;
  // Stationary level of sqrt(h) with zero shocks: (omega + a xi) / (1 - b - a phi).
  double fixed_point() const;
};

struct SimulatedSeries {
  std::vector<Date> dates;  // weekdays from 2000-01-03
  std::vector<double> returns;
  std::vector<double> measures;
  std::vector<double> sqrt_h;
  double sqrt_h_next = 0.0;  // sqrt(h_{n+1}), known at the end of day n

  SeriesView view() const { return {returns, measures}; }
  std::vector<DailyRecord> records() const;
};

SimulatedSeries simulate_dgp(const DgpSpec& spec);

// Standard normal quantile and density at alpha.
double z_alpha(double alpha);
// ES_t / VaR_t under Gaussian innovations: phi(z) / (alpha |z|).
double gaussian_es_var_ratio(double alpha);
// gamma0 with 1 + exp(gamma0) equal to the Gaussian ES/VaR ratio.
double true_gamma0_exp(double alpha);

// Quantile-equation and measurement parameters implied by the generator for a
// REESCAV family (gamma0 closed form for EXP; gammas zero for AR).
ParamVector map_truth(const DgpSpec& spec, double alpha, Family family);

struct GammaFit {
  std::array<double, 3> gamma{};
  double loglik = 0.0;
};

// Best of `n_trials` uniform (gamma0 in [0,1], gamma1, gamma2 in [0,1)) trials
// plus `extra` under the AL likelihood with Q fixed at `q`.
GammaFit true_gamma_ar(std::span<const double> returns, std::span<const double> q, double alpha,
                       std::size_t n_trials, std::uint64_t seed, std::span<const std::array<double, 3>> extra = {});
// AL log-likelihood of an AR ES offset path with Q fixed.
double ar_offset_loglik(std::span<const double> returns, std::span<const double> q, double alpha,
                        const std::array<double, 3>& gamma);

struct TruthRecord {
  ParamVector params;
  std::vector<double> var;
  std::vector<double> es;
  RiskForecast next;
  std::optional<GammaFit> gamma_ar;
};

// True VaR/ES paths, next-day forecast and parameters. For AR families the
// gammas come from true_gamma_ar with `gamma_trials` trials.
TruthRecord make_truth(const DgpSpec& spec, const SimulatedSeries& sim, double alpha, Family family,
                       std::size_t gamma_trials, std::uint64_t seed);

struct StudyConfig {
  std::size_t reps = 50;
  Family family = Family::REESCAV_EXP;
  double alpha = 0.01;
  DgpSpec dgp;
  std::size_t gamma_trials = 5000;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct StudyRow {
  std::string name;  // parameter name, "var_next" or "es_next"
  double truth = 0.0;  // mean true value
  double mean = 0.0;   // mean estimate
  double rmse = 0.0;
};

struct StudyReplication {
  TruthRecord truth;
  std::optional<Estimate> estimate;  // empty when estimation failed
  std::string error;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  std::vector<StudyReplication> reps;
  std::size_t failures = 0;
};

// Replication r simulates with derive_seed(seed, 2r) and estimates with
// derive_seed(seed, 2r + 1). Failed replications are excluded from the table.
StudyResult replication_study(const StudyConfig& cfg, const Estimator& estimator);
// Bias/RMSE table from finished replications.
std::vector<StudyRow> summarize_study(Family family, std::span<const StudyReplication> reps);

}  // namespace rescav
