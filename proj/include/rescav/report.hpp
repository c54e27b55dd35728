#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace rescav {

struct TestResult {
  double stat = 0.0;
  double pvalue = 1.0;
  bool reject_5pct = false;
};

// Evaluation of one forecast series. A test is empty when its statistic is
// undefined for the data (e.g. singular DQ design); the reason is in `flags`.
struct BacktestReport {
  std::string model;
  double alpha = 0.0;
  std::size_t m = 0;
  double vrate = 0.0;
  std::size_t n_violations = 0;
  double es_rate = 0.0;  // descriptive only: share of returns below the ES forecast
  double quantile_loss = 0.0;
  double joint_loss = 0.0;
  std::optional<TestResult> uc;
  std::optional<TestResult> cc;
  std::optional<TestResult> dq1;
  std::optional<TestResult> dq4;
  std::optional<TestResult> vqr;
  std::vector<std::string> flags;
};

enum class McsMethod { R, SQ };

struct McsElimination {
  std::string model;
  double pvalue = 0.0;
};

struct McsResult {
  McsMethod method = McsMethod::R;
  double level = 0.9;
  std::vector<std::string> survivors;
  // Models outside the confidence set, in elimination order, with MCS p-values.
  std::vector<McsElimination> eliminations;
  // Full elimination sequence (including the models that stay in the set).
  std::vector<McsElimination> sequence;
};

}  // namespace rescav
