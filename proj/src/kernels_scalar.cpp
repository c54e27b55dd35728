#include <cmath>

#include "rescav/kernels.hpp"

namespace rescav::kernels {

namespace {

double al_score_sum_scalar(const double* r, const double* q, const double* es, std::size_t n, double alpha) {
  const double log1ma = std::log1p(-alpha);
  double sum = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double hit = r[t] <= q[t] ? 1.0 : 0.0;
    sum += std::log(-es[t]) - log1ma - (r[t] - q[t]) * (alpha - hit) / (alpha * es[t]);
  }
  return sum;
}

double check_loss_sum_scalar(const double* r, const double* q, std::size_t n, double alpha) {
  double sum = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double hit = r[t] < q[t] ? 1.0 : 0.0;
    sum += (alpha - hit) * (r[t] - q[t]);
  }
  return sum;
}

std::size_t count_below_scalar(const double* a, const double* b, std::size_t n) {
  std::size_t count = 0;
  for (std::size_t t = 0; t < n; ++t) count += a[t] < b[t] ? 1 : 0;
  return count;
}

double ratio_square_sum_scalar(const double* r, const double* q, std::size_t n, double* eps) {
  double sum = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    eps[t] = r[t] / q[t];
    sum += eps[t] * eps[t];
  }
  return sum;
}

double measurement_residuals_scalar(const double* x, const double* q, const double* eps, std::size_t n,
                                    const MeasurementCoeffs& c, double* u) {
  double sum = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    u[t] = x[t] - c.xi - c.phi * std::fabs(q[t]) - c.tau1 * eps[t] - c.tau2 * (eps[t] * eps[t] - c.eps2bar);
    sum += u[t] * u[t];
  }
  return sum;
}

constexpr KernelTable kScalar{Isa::scalar,
                              al_score_sum_scalar,
                              check_loss_sum_scalar,
                              count_below_scalar,
                              ratio_square_sum_scalar,
                              measurement_residuals_scalar};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace rescav::kernels
