#pragma once

#include <limits>
#include <span>

#include "rescav/model.hpp"

namespace rescav {

inline constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

struct LogLik {
  double total = 0.0;
  double al_part = 0.0;
  double measurement_part = 0.0;  // zero for ESCAV families
};

// True when every es_t is finite and strictly negative.
bool es_valid(std::span<const double> es);

// sum_t log(1-alpha) - log(-ES_t) + (r_t - Q_t)(alpha - 1{r_t <= Q_t}) / (alpha ES_t).
// Returns kMinusInf when some ES_t >= 0.
double al_loglik(std::span<const double> r, std::span<const double> q, std::span<const double> es, double alpha);

// Gaussian log density of n residuals with sum of squares `u_sum_sq`.
double measurement_loglik(double u_sum_sq, std::size_t n, double sigma_u);

// Throws DegenerateQuantile (from the filter) or InvalidArgument for points
// outside the support.
LogLik composite_loglik(const ModelSpec& spec, const ParamVector& params, SeriesView data, const InitPolicy& init);
// Likelihood parts from an existing filter pass.
LogLik composite_loglik(const ModelSpec& spec, const ParamVector& params, SeriesView data, const FilterOutput& fo);

// Estimator-boundary form: kMinusInf for any invalid point instead of throwing.
// `scratch` is reused across calls to avoid allocation.
double loglik_or_minus_inf(const ModelSpec& spec, const ParamVector& params, SeriesView data,
                           const InitPolicy& init, FilterOutput& scratch);

}  // namespace rescav
