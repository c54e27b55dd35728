#include "rescav/simulation.hpp"

#include <algorithm>
#include <cmath>

#include "rescav/error.hpp"
#include "rescav/likelihood.hpp"
#include "rescav/normal.hpp"
#include "rescav/parallel.hpp"
#include "rescav/rng.hpp"

namespace rescav {

void DgpSpec::validate() const {
  if (n == 0) throw InvalidArgument("dgp: n must be positive");
  if (!(sigma_u > 0.0)) throw InvalidArgument("dgp: sigma_u must be positive");
  if (!(b + a * phi < 1.0)) throw InvalidArgument("dgp: b + a*phi must be < 1");
  if (sqrt_h1 && !(*sqrt_h1 > 0.0)) throw InvalidArgument("dgp: initial sqrt(h) must be positive");
  for (const auto& s : shifts) {
    if (!(s.omega + a * xi > 0.0)) throw InvalidArgument("dgp: regime intercept must keep sqrt(h) positive");
  }
}

double DgpSpec::fixed_point() const { return (omega + a * xi) / (1.0 - b - a * phi); }

std::vector<DailyRecord> SimulatedSeries::records() const {
  std::vector<DailyRecord> out;
  out.reserve(returns.size());
  for (std::size_t t = 0; t < returns.size(); ++t) out.push_back({dates[t], returns[t], measures[t]});
  return out;
}

SimulatedSeries simulate_dgp(const DgpSpec& spec) {
  spec.validate();
  SimulatedSeries s;
  s.dates.reserve(spec.n);
  s.returns.reserve(spec.n);
  s.measures.reserve(spec.n);
  s.sqrt_h.reserve(spec.n);

  Rng rng(spec.seed);
  NormalSampler normal;
  auto omega_at = [&](std::size_t t) {
    double w = spec.omega;
    for (const auto& sh : spec.shifts) {
      if (t >= sh.start) w = sh.omega;
    }
    return w;
  };

  Date d = Date::from_ymd(2000, 1, 3);
  double sh = spec.sqrt_h1.value_or(spec.fixed_point());
  double x_prev = 0.0;
  for (std::size_t t = 0; t < spec.n; ++t) {
    if (t > 0) {
      sh = omega_at(t) + spec.a * x_prev + spec.b * sh;
      d = d.next_weekday();
    }
    double e = 0.0, u = 0.0, x = 0.0;
    if (spec.zero_shocks) {
      x = spec.xi + spec.phi * sh;
    } else {
      do {
        e = normal(rng);
        u = spec.sigma_u * normal(rng);
        x = spec.xi + spec.phi * sh + spec.tau1 * e + spec.tau2 * (e * e - 1.0) + u;
      } while (!(x > 0.0));
    }
    s.dates.push_back(d);
    s.sqrt_h.push_back(sh);
    s.returns.push_back(sh * e);
    s.measures.push_back(x);
    x_prev = x;
  }
  s.sqrt_h_next = omega_at(spec.n) + spec.a * x_prev + spec.b * sh;
  return s;
}

double z_alpha(double alpha) { return normal::quantile(alpha); }

double gaussian_es_var_ratio(double alpha) {
  const double z = z_alpha(alpha);
  return normal::pdf(z) / (alpha * std::fabs(z));
}

double true_gamma0_exp(double alpha) { return std::log(gaussian_es_var_ratio(alpha) - 1.0); }

ParamVector map_truth(const DgpSpec& spec, double alpha, Family family) {
  if (!is_realized(family)) throw InvalidArgument("map_truth applies to the realized families");
  if (!(alpha > 0.0 && alpha < 0.5)) throw InvalidArgument("alpha must lie in (0, 0.5)");
  const double z = z_alpha(alpha);
  ParamVector p;
  p.family = family;
  p[Param::beta0] = spec.omega * z;
  p[Param::beta1] = spec.a * z;
  p[Param::beta2] = spec.b;
  p[Param::xi] = spec.xi;
  p[Param::phi] = -spec.phi / z;
  p[Param::tau1] = spec.tau1 * z;
  p[Param::tau2] = spec.tau2 * z * z;
  p[Param::sigma_u] = spec.sigma_u;
  if (!has_ar_es(family)) p[Param::gamma0] = true_gamma0_exp(alpha);
  return p;
}

double ar_offset_loglik(std::span<const double> returns, std::span<const double> q, double alpha,
                        const std::array<double, 3>& g) {
  const std::size_t n = returns.size();
  std::vector<double> es(n);
  double x = g[0];
  es[0] = q[0] - x;
  for (std::size_t t = 1; t < n; ++t) {
    if (returns[t - 1] <= q[t - 1]) x = g[0] + g[1] * (q[t - 1] - returns[t - 1]) + g[2] * x;
    es[t] = q[t] - x;
  }
  return al_loglik(returns, q, es, alpha);
}

GammaFit true_gamma_ar(std::span<const double> returns, std::span<const double> q, double alpha,
                       std::size_t n_trials, std::uint64_t seed, std::span<const std::array<double, 3>> extra) {
  if (returns.size() != q.size() || returns.empty()) throw InvalidArgument("true_gamma_ar: length mismatch");
  if (n_trials == 0 && extra.empty()) throw InvalidArgument("true_gamma_ar: no trials");
  Rng rng(seed);
  GammaFit best;
  best.loglik = kMinusInf;
  bool have = false;
  auto consider = [&](const std::array<double, 3>& g) {
    const double ll = ar_offset_loglik(returns, q, alpha, g);
    if (!have || ll > best.loglik) {
      best = {g, ll};
      have = true;
    }
  };
  for (std::size_t k = 0; k < n_trials; ++k) {
    const double g0 = uniform(rng, 0.0, 1.0);
    const double g1 = uniform(rng, 0.0, 1.0);
    const double g2 = uniform(rng, 0.0, 1.0);
    consider({g0, g1, g2});
  }
  for (const auto& g : extra) consider(g);
  return best;
}

TruthRecord make_truth(const DgpSpec& spec, const SimulatedSeries& sim, double alpha, Family family,
                       std::size_t gamma_trials, std::uint64_t seed) {
  const double z = z_alpha(alpha);
  const double es_factor = -normal::pdf(z) / alpha;
  TruthRecord tr;
  tr.var.reserve(sim.sqrt_h.size());
  tr.es.reserve(sim.sqrt_h.size());
  for (double sh : sim.sqrt_h) {
    tr.var.push_back(sh * z);
    tr.es.push_back(sh * es_factor);
  }
  tr.next = {sim.sqrt_h_next * z, sim.sqrt_h_next * es_factor};
  if (is_realized(family)) {
    tr.params = map_truth(spec, alpha, family);
  } else {
    tr.params.family = family;
  }
  if (has_ar_es(family)) {
    // The constant Gaussian offset is always among the trials.
    const double ratio = gaussian_es_var_ratio(alpha);
    const double mean_q = [&] {
      double s = 0.0;
      for (double v : tr.var) s += v;
      return s / static_cast<double>(tr.var.size());
    }();
    const std::array<double, 3> constant{(1.0 - ratio) * mean_q, 0.0, 0.0};
    tr.gamma_ar = true_gamma_ar(sim.returns, tr.var, alpha, gamma_trials, seed, std::span(&constant, 1));
    tr.params[Param::gamma0] = tr.gamma_ar->gamma[0];
    tr.params[Param::gamma1] = tr.gamma_ar->gamma[1];
    tr.params[Param::gamma2] = tr.gamma_ar->gamma[2];
  }
  return tr;
}

std::vector<StudyRow> summarize_study(Family family, std::span<const StudyReplication> reps) {
  std::vector<StudyRow> rows;
  const auto active = active_params(family);
  std::vector<std::string> names;
  for (Param p : active) names.emplace_back(param_name(p));
  names.emplace_back("var_next");
  names.emplace_back("es_next");
  rows.resize(names.size());
  std::size_t count = 0;
  for (const auto& rep : reps) {
    if (!rep.estimate || !rep.estimate->forecast) continue;
    ++count;
    for (std::size_t i = 0; i < names.size(); ++i) {
      double truth = 0.0, est = 0.0;
      if (i < active.size()) {
        truth = rep.truth.params[active[i]];
        est = rep.estimate->params[active[i]];
      } else if (i == active.size()) {
        truth = rep.truth.next.var;
        est = rep.estimate->forecast->var;
      } else {
        truth = rep.truth.next.es;
        est = rep.estimate->forecast->es;
      }
      rows[i].truth += truth;
      rows[i].mean += est;
      rows[i].rmse += (est - truth) * (est - truth);
    }
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    rows[i].name = names[i];
    if (count == 0) continue;
    const auto c = static_cast<double>(count);
    rows[i].truth /= c;
    rows[i].mean /= c;
    rows[i].rmse = std::sqrt(rows[i].rmse / c);
  }
  return rows;
}

StudyResult replication_study(const StudyConfig& cfg, const Estimator& estimator) {
  if (cfg.reps == 0) throw InvalidArgument("replication study needs at least one replication");
  const ModelSpec spec{cfg.family, cfg.alpha};
  spec.validate();
  StudyResult res;
  res.reps.resize(cfg.reps);
  parallel_for(cfg.reps, cfg.threads, [&](std::size_t r) {
    DgpSpec dgp = cfg.dgp;
    dgp.seed = derive_seed(cfg.seed, 2 * r);
    const SimulatedSeries sim = simulate_dgp(dgp);
    StudyReplication& rep = res.reps[r];
    rep.truth = make_truth(dgp, sim, cfg.alpha, cfg.family, cfg.gamma_trials, derive_seed(dgp.seed, 7));
    try {
      Estimate e = estimator.fit(spec, sim.view(), derive_seed(cfg.seed, 2 * r + 1), std::nullopt);
      if (!e.forecast) {
        const FilterOutput fo = filter(spec, e.params, sim.view(), InitPolicy::empirical(sim.returns, cfg.alpha));
        e.forecast = forecast_one(spec, e.params, sim.view(), fo);
      }
      rep.estimate = std::move(e);
    } catch (const Error& ex) {
      rep.error = ex.what();
    }
  });
  for (const auto& rep : res.reps) res.failures += rep.estimate ? 0 : 1;
  res.rows = summarize_study(cfg.family, res.reps);
  return res;
}

}  // namespace rescav
