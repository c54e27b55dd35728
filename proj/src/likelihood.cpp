#include "rescav/likelihood.hpp"

#include <cmath>
#include <numbers>

#include "rescav/error.hpp"
#include "rescav/kernels.hpp"

namespace rescav {

bool es_valid(std::span<const double> es) {
  for (double e : es) {
    if (!(e < 0.0) || !std::isfinite(e)) return false;
  }
  return true;
}

double al_loglik(std::span<const double> r, std::span<const double> q, std::span<const double> es, double alpha) {
  if (!es_valid(es)) return kMinusInf;
  const double v = -kernels::al_score_sum(r, q, es, alpha);
  return std::isfinite(v) ? v : kMinusInf;
}

double measurement_loglik(double u_sum_sq, std::size_t n, double sigma_u) {
  if (!(sigma_u > 0.0)) return kMinusInf;
  const double nn = static_cast<double>(n);
  const double s2 = sigma_u * sigma_u;
  return -0.5 * (nn * std::log(2.0 * std::numbers::pi) + nn * std::log(s2) + u_sum_sq / s2);
}

LogLik composite_loglik(const ModelSpec& spec, const ParamVector& params, SeriesView data, const FilterOutput& fo) {
  LogLik ll;
  ll.al_part = al_loglik(data.returns, fo.q, fo.es, spec.alpha);
  if (is_realized(spec.family)) {
    ll.measurement_part = measurement_loglik(fo.u_sum_sq, data.size(), params[Param::sigma_u]);
  }
  ll.total = ll.al_part + ll.measurement_part;
  if (!std::isfinite(ll.total)) ll.total = kMinusInf;
  return ll;
}

LogLik composite_loglik(const ModelSpec& spec, const ParamVector& params, SeriesView data, const InitPolicy& init) {
  if (auto why = constraint_violation(params)) throw InvalidArgument("parameter point outside the support: " + *why);
  const FilterOutput fo = filter(spec, params, data, init);
  return composite_loglik(spec, params, data, fo);
}

double loglik_or_minus_inf(const ModelSpec& spec, const ParamVector& params, SeriesView data,
                           const InitPolicy& init, FilterOutput& scratch) {
  if (!in_support(params)) return kMinusInf;
  try {
    filter_into(spec, params, data, init, scratch);
  } catch (const DegenerateQuantile&) {
    return kMinusInf;
  }
  return composite_loglik(spec, params, data, scratch).total;
}

}  // namespace rescav
