#include "rescav/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <ostream>

#include <Eigen/Dense>

#include "rescav/data_io.hpp"
#include "rescav/error.hpp"
#include "rescav/likelihood.hpp"
#include "rescav/log.hpp"
#include "rescav/parallel.hpp"
#include "rescav/rng.hpp"

namespace rescav {

BlockLayout BlockLayout::defaults(Family family) {
  BlockLayout layout;
  if (is_realized(family)) {
    layout.blocks.push_back({Param::beta0, Param::beta1, Param::beta2, Param::phi});
    layout.blocks.push_back({Param::xi, Param::tau1, Param::tau2, Param::sigma_u});
  } else {
    layout.blocks.push_back({Param::beta0, Param::beta1, Param::beta2});
  }
  if (has_ar_es(family)) {
    layout.blocks.push_back({Param::gamma0, Param::gamma1, Param::gamma2});
  } else {
    layout.blocks.push_back({Param::gamma0});
  }
  return layout;
}

void BlockLayout::validate(Family family) const {
  const auto active = active_params(family);
  std::vector<int> seen(kParamCount, 0);
  for (const auto& b : blocks) {
    if (b.empty()) throw InvalidArgument("empty parameter block");
    for (Param p : b) ++seen[static_cast<std::size_t>(p)];
  }
  for (std::size_t i = 0; i < kParamCount; ++i) {
    const bool is_active = std::find(active.begin(), active.end(), static_cast<Param>(i)) != active.end();
    if (seen[i] != (is_active ? 1 : 0)) {
      throw InvalidArgument("block layout must cover every parameter of the family exactly once");
    }
  }
}

void McmcConfig::validate() const {
  if (epoch_length == 0 || discard >= epoch_length) throw InvalidArgument("mcmc: need discard < epoch length");
  if (imh_length <= discard) throw InvalidArgument("mcmc: final stage must be longer than the discard");
  if (!(sd_change_threshold > 0.0)) throw InvalidArgument("mcmc: sd-change threshold must be positive");
  if (max_epochs == 0) throw InvalidArgument("mcmc: max epochs must be at least 1");
  if (adapt_batch == 0) throw InvalidArgument("mcmc: adaptation batch must be positive");
  double wsum = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    if (!(scales[i] > 0.0) || weights[i] < 0.0) throw InvalidArgument("mcmc: bad mixture scales or weights");
    wsum += weights[i];
  }
  if (!(wsum > 0.0)) throw InvalidArgument("mcmc: mixture weights sum to zero");
}

double target_acceptance(std::size_t d) {
  if (d > 4) return 0.234;
  if (d >= 2) return 0.35;
  return 0.44;
}

ParamVector Chain::row(std::size_t r) const {
  ParamVector p;
  p.family = family;
  for (std::size_t j = 0; j < dim(); ++j) p[params[j]] = at(r, j);
  return p;
}

std::vector<double> Chain::retained(std::size_t col) const {
  std::vector<double> out;
  out.reserve(retained_count());
  for (std::size_t r = retained_begin; r < rows(); ++r) out.push_back(at(r, col));
  return out;
}

namespace {

constexpr double kJitter = 1e-10;

struct Block {
  std::vector<std::size_t> cols;
  Eigen::MatrixXd cov;
  Eigen::MatrixXd chol;  // lower factor of cov
  double log_scale = 0.0;
  double target = 0.44;
  Eigen::VectorXd imh_mean;
  double chol_logdet = 0.0;
};

bool set_cov(Block& b, const Eigen::MatrixXd& cov) {
  Eigen::MatrixXd c = cov;
  c.diagonal().array() += kJitter;
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) return false;
  Eigen::MatrixXd l = llt.matrixL();
  if (!l.allFinite()) return false;
  b.cov = c;
  b.chol = l;
  b.chol_logdet = l.diagonal().array().log().sum();
  return true;
}

class Sampler {
 public:
  Sampler(const LogTarget& target, std::vector<double> start, const std::vector<std::vector<std::size_t>>& blocks,
          const McmcConfig& cfg, const RetainedHook& hook)
      : target_(target), cfg_(cfg), hook_(hook), rng_(cfg.seed), cur_(std::move(start)) {
    run_.dim = cur_.size();
    std::vector<int> seen(run_.dim, 0);
    for (const auto& cols : blocks) {
      if (cols.empty()) throw InvalidArgument("empty parameter block");
      Block b;
      b.cols = cols;
      for (std::size_t c : cols) {
        if (c >= run_.dim) throw InvalidArgument("block index out of range");
        ++seen[c];
      }
      const auto d = static_cast<double>(cols.size());
      set_cov(b, Eigen::MatrixXd::Identity(cols.size(), cols.size()) * (2.38 / std::sqrt(d)));
      b.target = target_acceptance(cols.size());
      blocks_.push_back(std::move(b));
    }
    if (std::any_of(seen.begin(), seen.end(), [](int v) { return v != 1; })) {
      throw InvalidArgument("blocks must partition the coordinates");
    }
    double wsum = 0.0;
    for (double w : cfg.weights) wsum += w;
    for (std::size_t i = 0; i < 3; ++i) {
      weights_[i] = cfg.weights[i] / wsum;
      log_weights_[i] = std::log(weights_[i]);
    }
    cur_lp_ = target_(cur_);
    if (!std::isfinite(cur_lp_)) throw NumericalError("mcmc: non-finite likelihood at the initial point");
  }

  AdaptiveRun run() {
    std::vector<double> prev_sd;
    std::size_t epoch = 0;
    for (; epoch < cfg_.max_epochs; ++epoch) {
      EpochStats stats = run_epoch(cfg_.epoch_length, false);
      const std::size_t first = run_.epoch_starts.back() + cfg_.discard;
      const Eigen::MatrixXd window = rows_matrix(first, rows());
      const Eigen::RowVectorXd mean = window.colwise().mean();
      const Eigen::MatrixXd centred = window.rowwise() - mean;
      const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(window.rows() - 1);
      std::vector<double> sd(run_.dim);
      for (std::size_t j = 0; j < sd.size(); ++j) sd[j] = std::sqrt(std::max(cov(j, j), 0.0));

      const bool all_rejected =
          std::all_of(stats.accepted.begin(), stats.accepted.end(), [](std::size_t a) { return a == 0; });
      if (all_rejected) throw NumericalError("mcmc: every proposal was rejected in an epoch");

      if (!prev_sd.empty()) {
        double change = 0.0;
        for (std::size_t j = 0; j < sd.size(); ++j) {
          change += prev_sd[j] > 0.0 ? std::fabs(sd[j] - prev_sd[j]) / prev_sd[j] : (sd[j] > 0.0 ? 1.0 : 0.0);
        }
        stats.sd_change = change / static_cast<double>(sd.size());
      }
      for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
        Block& b = blocks_[bi];
        const auto d = b.cols.size();
        Eigen::VectorXd m(d);
        Eigen::MatrixXd c(d, d);
        for (std::size_t i = 0; i < d; ++i) {
          m(i) = mean(b.cols[i]);
          for (std::size_t k = 0; k < d; ++k) c(i, k) = cov(b.cols[i], b.cols[k]);
        }
        b.imh_mean = m;
        // A block that never moved keeps its previous proposal covariance.
        if (stats.accepted[bi] > 0) set_cov(b, c);
        b.log_scale = std::log(2.38 * 2.38 / static_cast<double>(d));
      }
      run_.epochs.push_back(stats);
      const bool stop = !prev_sd.empty() && stats.sd_change < cfg_.sd_change_threshold;
      prev_sd = sd;
      if (stop) {
        run_.sd_criterion_met = true;
        ++epoch;
        break;
      }
    }
    run_.burnin_epochs = epoch;
    run_.retained_begin = rows() + cfg_.discard;
    run_.epochs.push_back(run_epoch(cfg_.imh_length, true));
    return std::move(run_);
  }

 private:
  std::size_t rows() const { return run_.draws.size() / run_.dim; }

  Eigen::MatrixXd rows_matrix(std::size_t first, std::size_t last) const {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(last - first), static_cast<Eigen::Index>(run_.dim));
    for (std::size_t r = first; r < last; ++r) {
      for (std::size_t j = 0; j < run_.dim; ++j) m(r - first, j) = run_.draws[r * run_.dim + j];
    }
    return m;
  }

  std::size_t pick_component() {
    const double u = uniform01(rng_);
    double acc = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      acc += weights_[i];
      if (u < acc) return i;
    }
    return 2;
  }

  // log of the independence proposal density at y, up to the shared 2pi term.
  double imh_log_density(const Block& b, const Eigen::VectorXd& y) const {
    const auto d = static_cast<double>(b.cols.size());
    const Eigen::VectorXd v = b.chol.triangularView<Eigen::Lower>().solve(y - b.imh_mean);
    const double maha = v.squaredNorm();
    std::array<double, 3> terms{};
    for (std::size_t i = 0; i < 3; ++i) {
      const double c = cfg_.scales[i];
      terms[i] = log_weights_[i] - 0.5 * d * std::log(c) - b.chol_logdet - 0.5 * maha / c;
    }
    const double mx = *std::max_element(terms.begin(), terms.end());
    double s = 0.0;
    for (double t : terms) s += std::exp(t - mx);
    return mx + std::log(s);
  }

  bool step(Block& b, bool imh) {
    const std::size_t d = b.cols.size();
    const std::size_t comp = pick_component();
    Eigen::VectorXd z(d);
    for (std::size_t i = 0; i < d; ++i) z(i) = normal_(rng_);
    Eigen::VectorXd x(d);
    for (std::size_t i = 0; i < d; ++i) x(i) = cur_[b.cols[i]];
    const Eigen::VectorXd y = imh ? Eigen::VectorXd(b.imh_mean + std::sqrt(cfg_.scales[comp]) * (b.chol * z))
                                  : Eigen::VectorXd(x + std::sqrt(cfg_.scales[comp] * std::exp(b.log_scale)) *
                                                            (b.chol * z));
    prop_ = cur_;
    for (std::size_t i = 0; i < d; ++i) prop_[b.cols[i]] = y(i);
    const double lp = target_(prop_);
    if (!std::isfinite(lp)) return false;
    double log_ratio = lp - cur_lp_;
    if (imh) log_ratio += imh_log_density(b, x) - imh_log_density(b, y);
    if (log_ratio >= 0.0 || std::log(uniform01(rng_)) < log_ratio) {
      std::swap(cur_, prop_);
      cur_lp_ = lp;
      return true;
    }
    return false;
  }

  EpochStats run_epoch(std::size_t length, bool imh) {
    EpochStats stats;
    stats.imh = imh;
    stats.proposed.assign(blocks_.size(), 0);
    stats.accepted.assign(blocks_.size(), 0);
    std::vector<std::size_t> batch_acc(blocks_.size(), 0);
    std::size_t k = 0;
    bool changed = true;
    run_.epoch_starts.push_back(rows());
    run_.draws.reserve(run_.draws.size() + length * run_.dim);
    for (std::size_t it = 0; it < length; ++it) {
      for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
        ++stats.proposed[bi];
        if (step(blocks_[bi], imh)) {
          ++stats.accepted[bi];
          ++batch_acc[bi];
          changed = true;
        }
      }
      run_.draws.insert(run_.draws.end(), cur_.begin(), cur_.end());

      if (!imh && (it + 1) % cfg_.adapt_batch == 0) {
        ++k;
        for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
          const double rate = static_cast<double>(batch_acc[bi]) / static_cast<double>(cfg_.adapt_batch);
          blocks_[bi].log_scale += cfg_.adapt_rate * (rate - blocks_[bi].target) / static_cast<double>(k);
          batch_acc[bi] = 0;
        }
      }
      if (imh && it >= cfg_.discard && hook_) {
        hook_(cur_, changed);
        changed = false;
      }
    }
    return stats;
  }

  const LogTarget& target_;
  const McmcConfig& cfg_;
  const RetainedHook& hook_;
  Rng rng_;
  NormalSampler normal_;
  std::array<double, 3> weights_{};
  std::array<double, 3> log_weights_{};
  std::vector<Block> blocks_;
  AdaptiveRun run_;
  std::vector<double> cur_;
  std::vector<double> prop_;
  double cur_lp_ = kMinusInf;
};

ParamVector mcmc_start(const ModelSpec& spec, SeriesView data, const InitPolicy& init, const McmcConfig& cfg) {
  if (cfg.start) {
    if (cfg.start->family != spec.family) throw InvalidArgument("mcmc: start point has the wrong family");
    return *cfg.start;
  }
  MleConfig ml;
  ml.n_candidates = cfg.prefit_candidates;
  ml.beta_candidates = 500;
  ml.seed = derive_seed(cfg.seed, 0x5eed);
  ml.init = init;
  return fit_ml(spec, data, ml).params;
}

}  // namespace

AdaptiveRun run_adaptive_mh(const LogTarget& target, std::vector<double> start,
                            const std::vector<std::vector<std::size_t>>& blocks, const McmcConfig& cfg,
                            const RetainedHook& on_retained) {
  cfg.validate();
  if (start.empty()) throw InvalidArgument("mcmc: empty start vector");
  Sampler sampler(target, std::move(start), blocks, cfg, on_retained);
  return sampler.run();
}

McmcResult run_mcmc(const ModelSpec& spec, SeriesView data, const BlockLayout& layout, const McmcConfig& cfg) {
  spec.validate();
  cfg.validate();
  layout.validate(spec.family);
  const InitPolicy init = cfg.init.value_or(InitPolicy::empirical(data.returns, spec.alpha));
  const ParamVector start = mcmc_start(spec, data, init, cfg);

  const auto active = active_params(spec.family);
  std::vector<std::vector<std::size_t>> blocks;
  std::vector<std::size_t> block_of(active.size(), 0);
  for (std::size_t bi = 0; bi < layout.blocks.size(); ++bi) {
    std::vector<std::size_t> cols;
    for (Param p : layout.blocks[bi]) {
      const auto col = static_cast<std::size_t>(std::find(active.begin(), active.end(), p) - active.begin());
      cols.push_back(col);
      block_of[col] = bi;
    }
    blocks.push_back(std::move(cols));
  }

  FilterOutput scratch;
  const LogTarget target = [&](std::span<const double> x) {
    return loglik_or_minus_inf(spec, ParamVector::from_flat(spec.family, x), data, init, scratch);
  };
  McmcResult res;
  RiskForecast current{std::nan(""), std::nan("")};
  FilterOutput fo;
  const RetainedHook hook = [&](std::span<const double> x, bool changed) {
    if (changed) {
      const ParamVector p = ParamVector::from_flat(spec.family, x);
      try {
        filter_into(spec, p, data, init, fo);
        current = forecast_one(spec, p, data, fo);
      } catch (const DegenerateQuantile&) {
        current = {std::nan(""), std::nan("")};
      }
    }
    res.forecast_draws.push_back(current);
  };
  AdaptiveRun run = run_adaptive_mh(target, start.to_flat(), blocks, cfg, hook);

  Chain& chain = res.chain;
  chain.family = spec.family;
  chain.params.assign(active.begin(), active.end());
  chain.block_of = block_of;
  chain.draws = std::move(run.draws);
  chain.epoch_starts = std::move(run.epoch_starts);
  chain.epochs = std::move(run.epochs);
  chain.retained_begin = run.retained_begin;
  chain.seed = cfg.seed;
  res.burnin_epochs = run.burnin_epochs;
  res.sd_criterion_met = run.sd_criterion_met;

  const std::size_t kept = chain.retained_count();
  res.posterior_mean.family = spec.family;
  res.posterior_sd.assign(chain.dim(), 0.0);
  for (std::size_t j = 0; j < chain.dim(); ++j) {
    const auto col = chain.retained(j);
    const double mu = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(kept);
    double ss = 0.0;
    for (double v : col) ss += (v - mu) * (v - mu);
    res.posterior_mean[chain.params[j]] = mu;
    res.posterior_sd[j] = kept > 1 ? std::sqrt(ss / static_cast<double>(kept - 1)) : 0.0;
  }
  std::size_t finite = 0;
  for (const auto& f : res.forecast_draws) {
    if (!std::isfinite(f.var)) continue;
    res.forecast.var += f.var;
    res.forecast.es += f.es;
    ++finite;
  }
  if (finite == 0) throw NumericalError("mcmc: no retained draw produced a finite forecast");
  if (finite < res.forecast_draws.size()) log_warning("mcmc: some retained draws gave a degenerate forecast");
  res.forecast.var /= static_cast<double>(finite);
  res.forecast.es /= static_cast<double>(finite);
  return res;
}

std::vector<McmcResult> run_chains(const ModelSpec& spec, SeriesView data, const BlockLayout& layout,
                                   const McmcConfig& cfg, std::size_t n_chains, std::size_t threads) {
  spec.validate();
  cfg.validate();
  layout.validate(spec.family);
  McmcConfig shared = cfg;
  const InitPolicy init = cfg.init.value_or(InitPolicy::empirical(data.returns, spec.alpha));
  shared.init = init;
  shared.start = mcmc_start(spec, data, init, cfg);
  std::vector<McmcResult> out(n_chains);
  parallel_for(n_chains, threads, [&](std::size_t c) {
    McmcConfig mine = shared;
    mine.seed = derive_seed(cfg.seed, c);
    out[c] = run_mcmc(spec, data, layout, mine);
  });
  return out;
}

double gelman_rubin(std::span<const std::vector<double>> chains) {
  if (chains.size() < 2) throw InvalidArgument("gelman_rubin needs at least two chains");
  const std::size_t n = chains.front().size();
  if (n < 2) throw InvalidArgument("gelman_rubin needs at least two draws per chain");
  for (const auto& c : chains) {
    if (c.size() != n) throw InvalidArgument("gelman_rubin: chains must have equal length");
  }
  const auto m = static_cast<double>(chains.size());
  const auto nn = static_cast<double>(n);
  std::vector<double> means;
  double w = 0.0;
  for (const auto& c : chains) {
    const double mu = std::accumulate(c.begin(), c.end(), 0.0) / nn;
    double ss = 0.0;
    for (double v : c) ss += (v - mu) * (v - mu);
    means.push_back(mu);
    w += ss / (nn - 1.0);
  }
  w /= m;
  if (!(w > 0.0)) throw NumericalError("gelman_rubin: zero within-chain variance");
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= nn / (m - 1.0);
  const double var_plus = (nn - 1.0) / nn * w + b / nn;
  return std::sqrt(var_plus / w);
}

std::vector<double> gelman_rubin(std::span<const McmcResult> results) {
  if (results.size() < 2) throw InvalidArgument("gelman_rubin needs at least two chains");
  std::vector<double> out;
  for (std::size_t j = 0; j < results.front().chain.dim(); ++j) {
    std::vector<std::vector<double>> cols;
    for (const auto& r : results) cols.push_back(r.chain.retained(j));
    out.push_back(gelman_rubin(cols));
  }
  return out;
}

double effective_sample_size(std::span<const double> draws) {
  const std::size_t n = draws.size();
  if (n < 100) throw InvalidArgument("effective_sample_size needs at least 100 draws");
  const double mu = std::accumulate(draws.begin(), draws.end(), 0.0) / static_cast<double>(n);
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = draws[i] - mu;
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += c[i] * c[i + lag];
    return s / static_cast<double>(n);
  };
  const double c0 = autocov(0);
  if (!(c0 > 0.0)) throw NumericalError("effective_sample_size: constant chain");
  double tau = -1.0;
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    const double pair = (autocov(2 * m) + autocov(2 * m + 1)) / c0;
    if (!(pair > 0.0)) break;
    tau += 2.0 * pair;
  }
  return static_cast<double>(n) / tau;
}

void write_chain_csv(std::ostream& out, const Chain& chain) {
  out << "iter,block,param,value\n";
  for (std::size_t r = 0; r < chain.rows(); ++r) {
    for (std::size_t j = 0; j < chain.dim(); ++j) {
      out << r << ',' << chain.block_of[j] << ',' << param_name(chain.params[j]) << ','
          << format_double(chain.at(r, j)) << '\n';
    }
  }
}

void write_chain_csv(const std::filesystem::path& path, const Chain& chain) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_chain_csv(out, chain);
}

}  // namespace rescav
