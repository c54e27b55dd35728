#include "rescav/mle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "rescav/error.hpp"
#include "rescav/kernels.hpp"
#include "rescav/log.hpp"
#include "rescav/optim.hpp"
#include "rescav/parallel.hpp"
#include "rescav/rng.hpp"

namespace rescav {

namespace {

constexpr double kInf = HUGE_VAL;

// Check loss of the quantile path implied by (b0, b1, b2); +inf when degenerate.
double quantile_check_loss(double b0, double b1, double b2, std::span<const double> r, std::span<const double> d,
                           double q1, double alpha, std::vector<double>& q) {
  if (!(std::fabs(b2) < 1.0)) return kInf;
  const std::size_t n = r.size();
  q.resize(n);
  double qt = q1;
  q[0] = qt;
  for (std::size_t t = 1; t < n; ++t) {
    qt = b0 + b1 * d[t - 1] + b2 * qt;
    if (!(std::fabs(qt) >= kDegenerateQuantile) || !std::isfinite(qt)) return kInf;
    q[t] = qt;
  }
  return kernels::check_loss_sum(r, q, alpha);
}

// Least-squares measurement-equation coefficients given a quantile path.
void fit_measurement_ols(const FilterOutput& fo, std::span<const double> x, ParamVector& p) {
  const std::size_t n = x.size();
  Eigen::MatrixXd design(n, 4);
  Eigen::VectorXd y(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double e = fo.eps[t];
    design(t, 0) = 1.0;
    design(t, 1) = std::fabs(fo.q[t]);
    design(t, 2) = e;
    design(t, 3) = e * e - fo.eps2bar;
    y(t) = x[t];
  }
  const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(y);
  if (!coef.allFinite()) return;
  p[Param::xi] = coef(0);
  p[Param::phi] = coef(1);
  p[Param::tau1] = coef(2);
  p[Param::tau2] = coef(3);
  const double rss = (y - design * coef).squaredNorm();
  p[Param::sigma_u] = std::sqrt(std::max(rss / static_cast<double>(n), 1e-12));
}

}  // namespace

CandidateBox CandidateBox::defaults(Family family) {
  CandidateBox box;
  if (is_realized(family)) {
    box.bounds.push_back({Param::xi, {-1.0, 1.0}});
    box.bounds.push_back({Param::phi, {0.0, 1.5}});
    box.bounds.push_back({Param::tau1, {-0.5, 0.5}});
    box.bounds.push_back({Param::tau2, {-0.5, 0.5}});
    box.bounds.push_back({Param::sigma_u, {0.0, 1.0}});
  }
  if (has_ar_es(family)) {
    box.bounds.push_back({Param::gamma0, {0.0, 1.0}});
    box.bounds.push_back({Param::gamma1, {0.0, 1.0}});
    box.bounds.push_back({Param::gamma2, {0.0, 1.0}});
  } else {
    box.bounds.push_back({Param::gamma0, {-5.0, 1.0}});
  }
  return box;
}

ParamVector fit_quantile_equation(const ModelSpec& spec, SeriesView data, const InitPolicy& init,
                                  std::size_t n_candidates, std::uint64_t seed, std::size_t max_evals) {
  const std::size_t n = data.size();
  if (n < 3) throw InvalidArgument("quantile equation needs at least three observations");
  std::vector<double> abs_r;
  std::span<const double> d = data.measures;
  if (!is_realized(spec.family)) {
    abs_r.resize(n);
    std::transform(data.returns.begin(), data.returns.end(), abs_r.begin(), [](double v) { return std::fabs(v); });
    d = abs_r;
  }
  const double dbar = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  const double qhat = init.q1;

  Rng rng(derive_seed(seed, 1));
  std::vector<double> q;
  struct Cand {
    double loss;
    std::array<double, 3> b;
  };
  std::vector<Cand> cands;
  cands.reserve(n_candidates);
  for (std::size_t k = 0; k < std::max<std::size_t>(1, n_candidates); ++k) {
    const double b2 = uniform(rng, 0.0, 0.99);
    const double b1 = uniform(rng, -1.0, 0.2);
    // Centre beta0 on the value that reproduces the sample quantile on average.
    const double centre = qhat * (1.0 - b2) - b1 * dbar;
    const double b0 = centre + uniform(rng, -0.5, 0.5) * std::fabs(qhat) * (1.0 - b2);
    cands.push_back({quantile_check_loss(b0, b1, b2, data.returns, d, qhat, spec.alpha, q), {b0, b1, b2}});
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.loss < b.loss; });
  if (!std::isfinite(cands.front().loss)) throw NumericalError("no feasible candidate for the quantile equation");

  auto objective = [&](std::span<const double> b) {
    return quantile_check_loss(b[0], b[1], b[2], data.returns, d, qhat, spec.alpha, q);
  };
  NelderMeadConfig nm;
  nm.max_evals = max_evals;
  std::array<double, 3> best = cands.front().b;
  double fbest = cands.front().loss;
  const std::size_t starts = std::min<std::size_t>(3, cands.size());
  for (std::size_t s = 0; s < starts; ++s) {
    if (!std::isfinite(cands[s].loss)) break;
    const auto& b = cands[s].b;
    const std::array<double, 3> steps = {std::max(0.1 * std::fabs(b[0]), 0.01), std::max(0.1 * std::fabs(b[1]), 0.02),
                                         std::max(0.05 * std::fabs(b[2]), 0.02)};
    const auto r = nelder_mead(objective, {b[0], b[1], b[2]}, steps, nm);
    if (r.f < fbest) {
      fbest = r.f;
      best = {r.x[0], r.x[1], r.x[2]};
    }
  }
  ParamVector p;
  p.family = spec.family;
  p[Param::beta0] = best[0];
  p[Param::beta1] = best[1];
  p[Param::beta2] = best[2];
  return p;
}

MleResult fit_ml(const ModelSpec& spec, SeriesView data, const MleConfig& cfg) {
  spec.validate();
  if (data.size() < 3) throw InvalidArgument("fit_ml needs at least three observations");
  const InitPolicy init = cfg.init.value_or(InitPolicy::empirical(data.returns, spec.alpha));
  const std::size_t n_cand = cfg.n_candidates == 0 ? MleConfig::default_candidates(spec.family) : cfg.n_candidates;

  const ParamVector beta = fit_quantile_equation(spec, data, init, cfg.beta_candidates, cfg.seed, cfg.max_evals);

  // Step 2: random completions of the step-1 quantile equation.
  std::vector<ParamVector> cands;
  cands.reserve(n_cand + cfg.extra_candidates.size() + 1);
  const CandidateBox box = CandidateBox::defaults(spec.family);
  Rng rng(derive_seed(cfg.seed, 2));
  for (std::size_t k = 0; k < n_cand; ++k) {
    ParamVector p = beta;
    for (const auto& [param, lohi] : box.bounds) {
      double v = uniform(rng, lohi.first, lohi.second);
      if (param == Param::sigma_u) v = lohi.second - v;  // (0, 1]
      p[param] = v;
    }
    cands.push_back(p);
  }
  if (is_realized(spec.family)) {
    // Least-squares measurement coefficients on the step-1 quantile path.
    ParamVector p = beta;
    p[Param::gamma0] = has_ar_es(spec.family) ? 0.1 : -1.9;
    p[Param::gamma1] = 0.1;
    p[Param::gamma2] = 0.1;
    try {
      ParamVector probe = p;
      probe[Param::sigma_u] = 1.0;
      const FilterOutput fo = filter(spec, probe, data, init);
      fit_measurement_ols(fo, data.measures, p);
      cands.push_back(p);
    } catch (const DegenerateQuantile&) {
    }
  }
  for (const auto& extra : cfg.extra_candidates) {
    if (extra.family != spec.family) throw InvalidArgument("extra candidate has the wrong family");
    cands.push_back(extra);
  }

  std::vector<double> ll(cands.size(), kMinusInf);
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (cands.size() + kChunk - 1) / kChunk;
  parallel_for(chunks, cfg.threads, [&](std::size_t c) {
    FilterOutput scratch;
    const std::size_t end = std::min(cands.size(), (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) ll[i] = loglik_or_minus_inf(spec, cands[i], data, init, scratch);
  });
  const auto best_it = std::max_element(ll.begin(), ll.end());
  if (best_it == ll.end() || !std::isfinite(*best_it)) throw NumericalError("no feasible candidate");
  const ParamVector start = cands[static_cast<std::size_t>(best_it - ll.begin())];

  MleResult res;
  res.best_candidate_loglik = *best_it;
  res.evaluations = cands.size();

  const auto active = active_params(spec.family);
  FilterOutput scratch;
  auto objective = [&](std::span<const double> x) {
    const ParamVector p = ParamVector::from_flat(spec.family, x);
    const double v = loglik_or_minus_inf(spec, p, data, init, scratch);
    return std::isfinite(v) ? -v : kInf;
  };
  std::vector<double> x0 = start.to_flat();
  std::vector<double> steps(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    double s = std::max(0.1 * std::fabs(x0[i]), 0.02);
    if (active[i] == Param::beta2 || active[i] == Param::gamma2) s = std::min(s, 0.5 * (1.0 - std::fabs(x0[i])) + 1e-3);
    steps[i] = s;
  }
  NelderMeadConfig nm;
  nm.max_evals = cfg.max_evals;
  nm.restarts = cfg.restarts;
  const auto opt = nelder_mead(objective, x0, steps, nm);
  res.evaluations += opt.evals;
  res.converged = opt.converged;

  ParamVector best = start;
  if (std::isfinite(opt.f) && -opt.f >= res.best_candidate_loglik) best = ParamVector::from_flat(spec.family, opt.x);
  res.params = best;
  res.loglik = composite_loglik(spec, best, data, init);
  if (!res.converged) {
    res.flags.emplace_back("optimizer-not-converged");
    log_warning("fit_ml: local optimizer stopped at its evaluation budget");
  }
  return res;
}

}  // namespace rescav
