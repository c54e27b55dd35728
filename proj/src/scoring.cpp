#include "rescav/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include "rescav/error.hpp"
#include "rescav/kernels.hpp"
#include "rescav/likelihood.hpp"

namespace rescav {

namespace {

void require_same(std::size_t a, std::size_t b) {
  if (a != b) throw InvalidArgument("series lengths differ");
  if (a == 0) throw InvalidArgument("empty series");
}

double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

TestResult make_result(double stat, double df) {
  stat = std::max(stat, 0.0);
  const double p = chi2_sf(stat, df);
  return {stat, p, p < 0.05};
}

}  // namespace

std::size_t count_violations(std::span<const double> r, std::span<const double> var) {
  require_same(r.size(), var.size());
  return kernels::count_below(r, var);
}

double vrate(std::span<const double> r, std::span<const double> var) {
  return static_cast<double>(count_violations(r, var)) / static_cast<double>(r.size());
}

double quantile_loss(std::span<const double> r, std::span<const double> var, double alpha) {
  require_same(r.size(), var.size());
  return kernels::check_loss_sum(r, var, alpha);
}

double al_log_score(std::span<const double> r, std::span<const double> var, std::span<const double> es,
                    double alpha) {
  require_same(r.size(), var.size());
  require_same(r.size(), es.size());
  if (!es_valid(es)) throw InvalidArgument("AL log score needs ES < 0 on every day");
  return kernels::al_score_sum(r, var, es, alpha);
}

std::vector<double> al_log_scores(std::span<const double> r, std::span<const double> var,
                                  std::span<const double> es, double alpha) {
  require_same(r.size(), var.size());
  require_same(r.size(), es.size());
  if (!es_valid(es)) throw InvalidArgument("AL log score needs ES < 0 on every day");
  std::vector<double> out(r.size());
  const double log1ma = std::log1p(-alpha);
  for (std::size_t t = 0; t < r.size(); ++t) {
    const double hit = r[t] <= var[t] ? 1.0 : 0.0;
    out[t] = std::log(-es[t]) - log1ma - (r[t] - var[t]) * (alpha - hit) / (alpha * es[t]);
  }
  return out;
}

double chi2_sf(double x, double df) {
  if (!(df > 0.0)) throw InvalidArgument("chi-square degrees of freedom must be positive");
  if (std::isnan(x)) return std::nan("");
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(df / 2.0, x / 2.0);
}

TestResult uc_test(std::size_t x, std::size_t m, double alpha) {
  if (m == 0 || x > m) throw InvalidArgument("uc_test needs 0 <= violations <= m, m > 0");
  const auto xm = static_cast<double>(x);
  const auto mm = static_cast<double>(m);
  const double pi = xm / mm;
  const double l0 = xlogy(mm - xm, 1.0 - alpha) + xlogy(xm, alpha);
  const double l1 = xlogy(mm - xm, 1.0 - pi) + xlogy(xm, pi);
  return make_result(-2.0 * (l0 - l1), 1.0);
}

CcResult cc_test(std::span<const bool> hits, double alpha) {
  if (hits.size() < 2) throw InvalidArgument("cc_test needs at least two observations");
  const auto x = static_cast<std::size_t>(std::count(hits.begin(), hits.end(), true));
  const TestResult uc = uc_test(x, hits.size(), alpha);
  CcResult res;
  double lr_ind = 0.0;
  if (x == 0 || x == hits.size()) {
    res.degenerate = true;
  } else {
    double n00 = 0, n01 = 0, n10 = 0, n11 = 0;
    for (std::size_t t = 1; t < hits.size(); ++t) {
      const bool a = hits[t - 1], b = hits[t];
      if (!a && !b) ++n00;
      if (!a && b) ++n01;
      if (a && !b) ++n10;
      if (a && b) ++n11;
    }
    const double pi01 = n00 + n01 > 0 ? n01 / (n00 + n01) : 0.0;
    const double pi11 = n10 + n11 > 0 ? n11 / (n10 + n11) : 0.0;
    const double pi = (n01 + n11) / (n00 + n01 + n10 + n11);
    const double l0 = xlogy(n00 + n10, 1.0 - pi) + xlogy(n01 + n11, pi);
    const double l1 = xlogy(n00, 1.0 - pi01) + xlogy(n01, pi01) + xlogy(n10, 1.0 - pi11) + xlogy(n11, pi11);
    lr_ind = std::max(0.0, -2.0 * (l0 - l1));
  }
  res.test = make_result(uc.stat + lr_ind, 2.0);
  return res;
}

TestResult dq_test(std::span<const double> r, std::span<const double> var, double alpha, std::size_t lags) {
  require_same(r.size(), var.size());
  if (r.size() <= lags + 2 + lags) throw InvalidArgument("dq_test: too few observations for the lag order");
  const std::size_t m = r.size();
  std::vector<double> hit(m);
  for (std::size_t t = 0; t < m; ++t) hit[t] = (r[t] < var[t] ? 1.0 : 0.0) - alpha;
  const std::size_t rows = m - lags;
  const std::size_t cols = lags + 2;
  Eigen::MatrixXd design(rows, cols);
  Eigen::VectorXd psi(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t t = i + lags;
    design(i, 0) = 1.0;
    for (std::size_t k = 1; k <= lags; ++k) design(i, k) = hit[t - k];
    design(i, lags + 1) = var[t];
    psi(i) = hit[t];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < static_cast<Eigen::Index>(cols)) throw NumericalError("dq_test: singular design matrix");
  const Eigen::VectorXd beta = qr.solve(psi);
  const Eigen::VectorXd fitted = design * beta;
  // psi' X (X'X)^-1 X' psi is the squared norm of the projection of psi.
  const double stat = fitted.squaredNorm() / (alpha * (1.0 - alpha));
  return make_result(stat, static_cast<double>(cols));
}

BacktestReport backtest(const std::string& model, std::span<const double> r, std::span<const double> var,
                        std::span<const double> es, double alpha, const BacktestConfig& cfg) {
  require_same(r.size(), var.size());
  require_same(r.size(), es.size());
  BacktestReport rep;
  rep.model = model;
  rep.alpha = alpha;
  rep.m = r.size();
  rep.n_violations = count_violations(r, var);
  rep.vrate = static_cast<double>(rep.n_violations) / static_cast<double>(rep.m);
  rep.es_rate = static_cast<double>(kernels::count_below(r, es)) / static_cast<double>(rep.m);
  rep.quantile_loss = quantile_loss(r, var, alpha);
  rep.joint_loss = al_log_score(r, var, es, alpha);

  rep.uc = uc_test(rep.n_violations, rep.m, alpha);
  // std::vector<bool> is not contiguous, so spans need a plain array.
  const std::unique_ptr<bool[]> hits(new bool[r.size()]);
  for (std::size_t t = 0; t < r.size(); ++t) hits[t] = r[t] < var[t];
  const CcResult cc = cc_test(std::span<const bool>(hits.get(), r.size()), alpha);
  rep.cc = cc.test;
  if (cc.degenerate) rep.flags.emplace_back("cc-degenerate-hits");

  auto guarded = [&](const char* flag, auto&& fn) -> std::optional<TestResult> {
    try {
      return fn();
    } catch (const Error& e) {
      rep.flags.emplace_back(std::string(flag) + ": " + e.what());
      return std::nullopt;
    }
  };
  rep.dq1 = guarded("dq1", [&] { return dq_test(r, var, alpha, 1); });
  rep.dq4 = guarded("dq4", [&] { return dq_test(r, var, alpha, 4); });
  rep.vqr = guarded("vqr", [&] { return vqr_test(r, var, alpha, cfg.vqr_bootstrap, cfg.seed, cfg.threads); });
  return rep;
}

AlignedForecasts align_forecasts(std::span<const ForecastRecord> forecasts, std::span<const DailyRecord> data) {
  AlignedForecasts out;
  std::map<Date, double> ret;
  for (const auto& d : data) ret.emplace(d.date, d.ret);
  for (const auto& f : forecasts) {
    if (out.model.empty()) {
      out.model = f.model;
      out.alpha = f.alpha;
    } else if (f.model != out.model || f.alpha != out.alpha) {
      throw DataError("forecast file mixes models or alpha levels");
    }
    const auto it = ret.find(f.date);
    if (f.flag != ForecastFlag::ok || it == ret.end() || !std::isfinite(f.var) || !std::isfinite(f.es)) {
      ++out.skipped;
      continue;
    }
    out.dates.push_back(f.date);
    out.r.push_back(it->second);
    out.var.push_back(f.var);
    out.es.push_back(f.es);
  }
  return out;
}

}  // namespace rescav
