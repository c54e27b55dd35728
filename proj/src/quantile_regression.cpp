#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "rescav/error.hpp"
#include "rescav/parallel.hpp"
#include "rescav/rng.hpp"
#include "rescav/scoring.hpp"

namespace rescav {

namespace {

// min over the intercept of the check loss at a fixed slope. The minimizing
// intercept is the ceil(alpha n)-th order statistic of y - b x.
struct Profile {
  std::span<const double> y;
  std::span<const double> x;
  double alpha;
  std::vector<double> z;

  double operator()(double b, double* intercept = nullptr) {
    const std::size_t n = y.size();
    z.resize(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = y[i] - b * x[i];
    std::vector<double> work = z;
    auto k = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(n)));
    k = std::clamp<std::size_t>(k, 1, n) - 1;
    std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(k), work.end());
    const double a = work[k];
    double loss = 0.0;
    for (double v : z) {
      const double e = v - a;
      loss += e < 0.0 ? (alpha - 1.0) * e : alpha * e;
    }
    if (intercept != nullptr) *intercept = a;
    return loss;
  }
};

}  // namespace

QuantileFit quantile_regression(std::span<const double> y, std::span<const double> x, double alpha) {
  if (y.size() != x.size() || y.size() < 3) throw InvalidArgument("quantile_regression: need >= 3 paired points");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("quantile_regression: alpha must lie in (0, 1)");
  const auto [xmin, xmax] = std::minmax_element(x.begin(), x.end());
  if (!(*xmax - *xmin > 1e-12 * std::max(1.0, std::fabs(*xmax)))) {
    throw NumericalError("quantile_regression: constant regressor");
  }
  Profile f{y, x, alpha, {}};

  // The profile is convex, so once both ends are no lower than the centre the
  // minimum lies between them.
  const double f_centre = f(1.0);
  double h = 0.5;
  while (f(1.0 - h) < f_centre || f(1.0 + h) < f_centre) {
    h *= 2.0;
    if (h > 1e8) throw NumericalError("quantile_regression: unbounded slope");
  }
  double lo = 1.0 - h, hi = 1.0 + h;

  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - invphi * (hi - lo), d = lo + invphi * (hi - lo);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && hi - lo > 1e-10 * (1.0 + std::fabs(c)); ++it) {
    if (fc <= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - invphi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + invphi * (hi - lo);
      fd = f(d);
    }
  }
  QuantileFit fit;
  fit.slope = fc <= fd ? c : d;
  f(fit.slope, &fit.intercept);
  return fit;
}

TestResult vqr_test(std::span<const double> r, std::span<const double> var, double alpha, std::size_t bootstrap,
                    std::uint64_t seed, std::size_t threads) {
  if (r.size() != var.size()) throw InvalidArgument("series lengths differ");
  if (bootstrap < 2) throw InvalidArgument("vqr_test needs at least two bootstrap replicates");
  const QuantileFit fit = quantile_regression(r, var, alpha);
  const std::size_t m = r.size();

  std::vector<QuantileFit> boot(bootstrap);
  std::vector<char> ok(bootstrap, 0);
  parallel_for(bootstrap, threads, [&](std::size_t b) {
    Rng rng(derive_seed(seed, b));
    std::vector<double> yb(m), xb(m);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = uniform_index(rng, m);
      yb[i] = r[j];
      xb[i] = var[j];
    }
    try {
      boot[b] = quantile_regression(yb, xb, alpha);
      ok[b] = 1;
    } catch (const NumericalError&) {
    }
  });
  Eigen::MatrixXd draws(static_cast<Eigen::Index>(std::count(ok.begin(), ok.end(), 1)), 2);
  Eigen::Index row = 0;
  for (std::size_t b = 0; b < bootstrap; ++b) {
    if (!ok[b]) continue;
    draws(row, 0) = boot[b].intercept;
    draws(row, 1) = boot[b].slope;
    ++row;
  }
  if (draws.rows() < 2) throw NumericalError("vqr_test: bootstrap produced no usable replicate");
  const Eigen::RowVector2d mean = draws.colwise().mean();
  const Eigen::MatrixXd centred = draws.rowwise() - mean;
  const Eigen::Matrix2d cov = centred.transpose() * centred / static_cast<double>(draws.rows() - 1);
  Eigen::LDLT<Eigen::Matrix2d> ldlt(cov);
  if (ldlt.info() != Eigen::Success || !(cov.determinant() > 0.0)) {
    throw NumericalError("vqr_test: singular bootstrap covariance");
  }
  const Eigen::Vector2d dev(fit.intercept, fit.slope - 1.0);
  const double stat = std::max(0.0, dev.dot(ldlt.solve(dev)));
  const double p = chi2_sf(stat, 2.0);
  return {stat, p, p < 0.05};
}

}  // namespace rescav
