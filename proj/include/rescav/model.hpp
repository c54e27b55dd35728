#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rescav {

// ESCAV_*: quantile driven by |r_{t-1}|. REESCAV_*: driven by the realized
// measure X_{t-1}, with a measurement equation linking X_t to |Q_t|.
// *_AR: ES_t = Q_t - x_t with an autoregressive offset updated on violations.
// *_EXP: ES_t = (1 + exp(gamma0)) Q_t.
enum class Family { ESCAV_AR, ESCAV_EXP, REESCAV_AR, REESCAV_EXP };

inline constexpr std::array<Family, 4> kAllFamilies = {Family::ESCAV_AR, Family::ESCAV_EXP, Family::REESCAV_AR,
                                                       Family::REESCAV_EXP};

// "es-caviar-ar", "es-caviar-exp", "re-es-caviar-ar", "re-es-caviar-exp".
std::string to_string(Family family);
Family parse_family(std::string_view name);

constexpr bool is_realized(Family f) { return f == Family::REESCAV_AR || f == Family::REESCAV_EXP; }
constexpr bool has_ar_es(Family f) { return f == Family::ESCAV_AR || f == Family::REESCAV_AR; }

struct ModelSpec {
  Family family = Family::REESCAV_EXP;
  double alpha = 0.01;

  void validate() const;  // alpha in (0, 0.5)
};

enum class Param : std::size_t { beta0, beta1, beta2, xi, phi, tau1, tau2, sigma_u, gamma0, gamma1, gamma2 };
inline constexpr std::size_t kParamCount = 11;

std::string_view param_name(Param p);
std::optional<Param> parse_param(std::string_view name);
// Parameters used by a family, in canonical order.
std::span<const Param> active_params(Family family);

struct ParamVector {
  Family family = Family::REESCAV_EXP;
  std::array<double, kParamCount> values{};

  double operator[](Param p) const { return values[static_cast<std::size_t>(p)]; }
  double& operator[](Param p) { return values[static_cast<std::size_t>(p)]; }

  std::vector<double> to_flat() const;
  static ParamVector from_flat(Family family, std::span<const double> flat);

  friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

// Prior support. All families: |beta2| < 1. REESCAV: |beta2 + beta1 phi| < 1,
// sigma_u > 0. AR ES: gamma0, gamma1, gamma2 >= 0 and gamma2 < 1.
bool in_support(const ParamVector& p);
// Human-readable reason a point is outside the support, or nullopt.
std::optional<std::string> constraint_violation(const ParamVector& p);

// Returns and (for REESCAV) realized measures over the same days.
struct SeriesView {
  std::span<const double> returns;
  std::span<const double> measures;

  std::size_t size() const { return returns.size(); }
  SeriesView window(std::size_t begin, std::size_t length) const {
    return {returns.subspan(begin, length), measures.empty() ? measures : measures.subspan(begin, length)};
  }
};

// Empirical alpha-quantile, linear interpolation between order statistics.
double empirical_quantile(std::span<const double> values, double alpha);

// Starting values for the recursions. x1 defaults to gamma0 (AR families).
struct InitPolicy {
  double q1 = 0.0;
  std::optional<double> x1;

  static InitPolicy empirical(std::span<const double> returns, double alpha);
};

inline constexpr double kDegenerateQuantile = 1e-8;

struct FilterOutput {
  std::vector<double> q;    // conditional alpha-quantile (VaR)
  std::vector<double> es;   // expected shortfall
  std::vector<double> x;    // AR: ES offset; EXP: ES/VaR ratio
  std::vector<double> eps;  // r_t / Q_t (REESCAV only)
  std::vector<double> u;    // measurement residual (REESCAV only)
  double eps2bar = 0.0;     // sample mean of eps_t^2 (REESCAV only)
  double u_sum_sq = 0.0;    // sum of u_t^2 (REESCAV only)
};

// Throws DegenerateQuantile when |Q_t| < kDegenerateQuantile or Q_t is not finite.
FilterOutput filter(const ModelSpec& spec, const ParamVector& params, SeriesView data, const InitPolicy& init);
// Same, reusing the buffers held by `out`.
void filter_into(const ModelSpec& spec, const ParamVector& params, SeriesView data, const InitPolicy& init,
                 FilterOutput& out);

struct RiskForecast {
  double var = 0.0;
  double es = 0.0;
};

// One-step-ahead (VaR, ES) for the day after the last record in `data`.
RiskForecast forecast_one(const ModelSpec& spec, const ParamVector& params, SeriesView data, const FilterOutput& fo);

}  // namespace rescav
