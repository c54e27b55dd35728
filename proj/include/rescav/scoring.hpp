#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rescav/data_io.hpp"
#include "rescav/report.hpp"

namespace rescav {

// Violations use a strict inequality r_t < VaR_t.
std::size_t count_violations(std::span<const double> r, std::span<const double> var);
double vrate(std::span<const double> r, std::span<const double> var);
// sum_t (alpha - 1{r_t < Q_t}) (r_t - Q_t)
double quantile_loss(std::span<const double> r, std::span<const double> var, double alpha);
// Negative AL log-likelihood, summed. Throws InvalidArgument unless every ES_t < 0.
double al_log_score(std::span<const double> r, std::span<const double> var, std::span<const double> es,
                    double alpha);
// Per-day AL log scores (loss series for the model confidence set).
std::vector<double> al_log_scores(std::span<const double> r, std::span<const double> var,
                                  std::span<const double> es, double alpha);

// Survival function of the chi-square distribution.
double chi2_sf(double x, double df);

// Kupiec unconditional coverage, chi2(1).
TestResult uc_test(std::size_t violations, std::size_t m, double alpha);

struct CcResult {
  TestResult test;
  bool degenerate = false;  // zero or all hits: independence part set to 0
};
// Christoffersen conditional coverage (UC + first-order Markov independence), chi2(2).
CcResult cc_test(std::span<const bool> hits, double alpha);

// Engle-Manganelli dynamic quantile test: demeaned hits on [1, q lagged hits, VaR_t],
// chi2(q + 2). Throws NumericalError for a singular design.
TestResult dq_test(std::span<const double> r, std::span<const double> var, double alpha, std::size_t lags);

// Linear quantile regression r_t = a + b VaR_t at level alpha (check-loss minimum).
struct QuantileFit {
  double intercept = 0.0;
  double slope = 0.0;
};
QuantileFit quantile_regression(std::span<const double> y, std::span<const double> x, double alpha);

// Wald test of (intercept, slope) = (0, 1) with a pairs-bootstrap covariance
// from B resamples. Throws NumericalError for a constant VaR series or a
// singular bootstrap covariance.
TestResult vqr_test(std::span<const double> r, std::span<const double> var, double alpha, std::size_t bootstrap,
                    std::uint64_t seed, std::size_t threads = 1);

struct BacktestConfig {
  std::size_t vqr_bootstrap = 200;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

// Full report. Tests that cannot be computed are left empty with a flag.
BacktestReport backtest(const std::string& model, std::span<const double> r, std::span<const double> var,
                        std::span<const double> es, double alpha, const BacktestConfig& cfg);

// Aligns forecasts with realized returns by date, skipping failed records.
struct AlignedForecasts {
  std::string model;
  double alpha = 0.0;
  std::vector<Date> dates;
  std::vector<double> r;
  std::vector<double> var;
  std::vector<double> es;
  std::size_t skipped = 0;  // failed or unmatched records
};
AlignedForecasts align_forecasts(std::span<const ForecastRecord> forecasts, std::span<const DailyRecord> data);

struct McsConfig {
  McsMethod method = McsMethod::R;
  double level = 0.90;
  std::size_t bootstrap = 1000;
  std::size_t block_length = 0;  // 0: ceil(m^(1/3))
  std::uint64_t seed = 0;
};

// losses[i] is model i's per-day loss series; all of equal length.
McsResult model_confidence_set(std::span<const std::string> models, std::span<const std::vector<double>> losses,
                               const McsConfig& cfg);

}  // namespace rescav
