#include "rescav/model.hpp"

#include <algorithm>
#include <cmath>

#include "rescav/error.hpp"
#include "rescav/kernels.hpp"

namespace rescav {

namespace {

constexpr std::array<std::string_view, kParamCount> kNames = {"beta0", "beta1", "beta2", "xi",     "phi",   "tau1",
                                                              "tau2",  "sigma_u", "gamma0", "gamma1", "gamma2"};

constexpr std::array<Param, 6> kEscavAr = {Param::beta0, Param::beta1, Param::beta2,
                                           Param::gamma0, Param::gamma1, Param::gamma2};
constexpr std::array<Param, 4> kEscavExp = {Param::beta0, Param::beta1, Param::beta2, Param::gamma0};
constexpr std::array<Param, 11> kReAr = {Param::beta0, Param::beta1, Param::beta2,   Param::xi,
                                         Param::phi,   Param::tau1,  Param::tau2,    Param::sigma_u,
                                         Param::gamma0, Param::gamma1, Param::gamma2};
constexpr std::array<Param, 9> kReExp = {Param::beta0, Param::beta1, Param::beta2,   Param::xi,    Param::phi,
                                         Param::tau1,  Param::tau2,  Param::sigma_u, Param::gamma0};

}  // namespace

std::string to_string(Family family) {
  switch (family) {
    case Family::ESCAV_AR: return "es-caviar-ar";
    case Family::ESCAV_EXP: return "es-caviar-exp";
    case Family::REESCAV_AR: return "re-es-caviar-ar";
    case Family::REESCAV_EXP: return "re-es-caviar-exp";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  for (Family f : kAllFamilies) {
    if (to_string(f) == name) return f;
  }
  throw InvalidArgument("unknown model family '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
  if (!(alpha > 0.0 && alpha < 0.5)) throw InvalidArgument("alpha must lie in (0, 0.5)");
}

std::string_view param_name(Param p) { return kNames[static_cast<std::size_t>(p)]; }

std::optional<Param> parse_param(std::string_view name) {
  for (std::size_t i = 0; i < kParamCount; ++i) {
    if (kNames[i] == name) return static_cast<Param>(i);
  }
  return std::nullopt;
}

std::span<const Param> active_params(Family family) {
  switch (family) {
    case Family::ESCAV_AR: return kEscavAr;
    case Family::ESCAV_EXP: return kEscavExp;
    case Family::REESCAV_AR: return kReAr;
    case Family::REESCAV_EXP: return kReExp;
  }
  return {};
}

std::vector<double> ParamVector::to_flat() const {
  std::vector<double> out;
  for (Param p : active_params(family)) out.push_back((*this)[p]);
  return out;
}

ParamVector ParamVector::from_flat(Family family, std::span<const double> flat) {
  const auto names = active_params(family);
  if (flat.size() != names.size()) throw InvalidArgument("parameter vector has the wrong length for the family");
  ParamVector p;
  p.family = family;
  for (std::size_t i = 0; i < names.size(); ++i) p[names[i]] = flat[i];
  return p;
}

bool in_support(const ParamVector& p) {
  for (Param k : active_params(p.family)) {
    if (!std::isfinite(p[k])) return false;
  }
  if (!(std::fabs(p[Param::beta2]) < 1.0)) return false;
  if (is_realized(p.family)) {
    const double persistence = p[Param::beta2] + p[Param::beta1] * p[Param::phi];
    if (!(std::fabs(persistence) < 1.0)) return false;
    if (!(p[Param::sigma_u] > 0.0)) return false;
  }
  if (has_ar_es(p.family)) {
    if (!(p[Param::gamma0] >= 0.0 && p[Param::gamma1] >= 0.0 && p[Param::gamma2] >= 0.0)) return false;
    if (!(p[Param::gamma2] < 1.0)) return false;
  }
  return true;
}

std::optional<std::string> constraint_violation(const ParamVector& p) {
  if (in_support(p)) return std::nullopt;
  for (Param k : active_params(p.family)) {
    if (!std::isfinite(p[k])) return std::string(param_name(k)) + " is not finite";
  }
  if (!(std::fabs(p[Param::beta2]) < 1.0)) return std::string("|beta2| must be < 1");
  if (is_realized(p.family)) {
    if (!(std::fabs(p[Param::beta2] + p[Param::beta1] * p[Param::phi]) < 1.0)) {
      return std::string("|beta2 + beta1*phi| must be < 1");
    }
    if (!(p[Param::sigma_u] > 0.0)) return std::string("sigma_u must be > 0");
  }
  return std::string("gamma0, gamma1, gamma2 must be >= 0 and gamma2 < 1");
}

double empirical_quantile(std::span<const double> values, double alpha) {
  if (values.empty()) throw InvalidArgument("empirical quantile of an empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * alpha;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

InitPolicy InitPolicy::empirical(std::span<const double> returns, double alpha) {
  return InitPolicy{empirical_quantile(returns, alpha), std::nullopt};
}

void filter_into(const ModelSpec& spec, const ParamVector& p, SeriesView data, const InitPolicy& init,
                 FilterOutput& out) {
  const std::size_t n = data.size();
  if (n == 0) throw InvalidArgument("filter needs at least one observation");
  const bool realized = is_realized(spec.family);
  if (realized && data.measures.size() != n) throw InvalidArgument("realized families need a measure for every day");

  const double b0 = p[Param::beta0], b1 = p[Param::beta1], b2 = p[Param::beta2];
  const double g0 = p[Param::gamma0], g1 = p[Param::gamma1], g2 = p[Param::gamma2];
  const std::span<const double> r = data.returns;
  const std::span<const double> driver = realized ? data.measures : data.returns;

  out.q.resize(n);
  out.es.resize(n);
  out.x.resize(n);

  auto check = [](double q, std::size_t t) {
    if (!(std::fabs(q) >= kDegenerateQuantile) || !std::isfinite(q)) {
      throw DegenerateQuantile("degenerate quantile at t=" + std::to_string(t));
    }
  };

  double q = init.q1;
  check(q, 0);
  out.q[0] = q;
  if (has_ar_es(spec.family)) {
    double x = init.x1.value_or(g0);
    out.x[0] = x;
    out.es[0] = q - x;
    for (std::size_t t = 1; t < n; ++t) {
      const double d = realized ? driver[t - 1] : std::fabs(r[t - 1]);
      const double q_prev = q;
      q = b0 + b1 * d + b2 * q_prev;
      check(q, t);
      if (r[t - 1] <= q_prev) x = g0 + g1 * (q_prev - r[t - 1]) + g2 * x;
      out.q[t] = q;
      out.x[t] = x;
      out.es[t] = q - x;
    }
  } else {
    const double ratio = 1.0 + std::exp(g0);
    out.x[0] = ratio;
    out.es[0] = ratio * q;
    for (std::size_t t = 1; t < n; ++t) {
      const double d = realized ? driver[t - 1] : std::fabs(r[t - 1]);
      q = b0 + b1 * d + b2 * q;
      check(q, t);
      out.q[t] = q;
      out.x[t] = ratio;
      out.es[t] = ratio * q;
    }
  }

  if (realized) {
    out.eps.resize(n);
    out.u.resize(n);
    out.eps2bar = kernels::ratio_square_sum(r, out.q, out.eps) / static_cast<double>(n);
    const kernels::MeasurementCoeffs c{p[Param::xi], p[Param::phi], p[Param::tau1], p[Param::tau2], out.eps2bar};
    out.u_sum_sq = kernels::measurement_residuals(data.measures, out.q, out.eps, c, out.u);
  } else {
    out.eps.clear();
    out.u.clear();
    out.eps2bar = 0.0;
    out.u_sum_sq = 0.0;
  }
}

FilterOutput filter(const ModelSpec& spec, const ParamVector& params, SeriesView data, const InitPolicy& init) {
  FilterOutput out;
  filter_into(spec, params, data, init, out);
  return out;
}

RiskForecast forecast_one(const ModelSpec& spec, const ParamVector& p, SeriesView data, const FilterOutput& fo) {
  const std::size_t n = data.size();
  if (n == 0 || fo.q.size() != n) throw InvalidArgument("forecast_one needs the filter output for the full window");
  const double r_n = data.returns[n - 1];
  const double d = is_realized(spec.family) ? data.measures[n - 1] : std::fabs(r_n);
  const double q_n = fo.q[n - 1];
  const double q = p[Param::beta0] + p[Param::beta1] * d + p[Param::beta2] * q_n;
  if (!(std::fabs(q) >= kDegenerateQuantile) || !std::isfinite(q)) {
    throw DegenerateQuantile("degenerate one-step-ahead quantile");
  }
  if (has_ar_es(spec.family)) {
    double x = fo.x[n - 1];
    if (r_n <= q_n) x = p[Param::gamma0] + p[Param::gamma1] * (q_n - r_n) + p[Param::gamma2] * x;
    return {q, q - x};
  }
  return {q, (1.0 + std::exp(p[Param::gamma0])) * q};
}

}  // namespace rescav
