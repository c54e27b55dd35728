#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "rescav/mle.hpp"
#include "rescav/model.hpp"

namespace rescav {

// Ordered partition of a family's parameters into sampling blocks.
struct BlockLayout {
  std::vector<std::vector<Param>> blocks;

  // REESCAV: (beta0, beta1, beta2, phi), (xi, tau1, tau2, sigma_u), (gamma...).
  // ESCAV: (beta0, beta1, beta2), (gamma...).
  static BlockLayout defaults(Family family);
  // Throws InvalidArgument unless the blocks cover active_params(family) exactly once.
  void validate(Family family) const;
};

struct McmcConfig {
  std::size_t epoch_length = 20000;
  std::size_t discard = 2000;  // per epoch, including the final one
  double sd_change_threshold = 0.10;
  std::size_t max_epochs = 6;
  std::size_t imh_length = 10000;
  std::array<double, 3> scales = {1.0, 100.0, 0.01};
  std::array<double, 3> weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  std::size_t adapt_batch = 100;
  double adapt_rate = 1.0;
  std::uint64_t seed = 0;
  // Starting point; when empty a short ML fit supplies it.
  std::optional<ParamVector> start;
  std::size_t prefit_candidates = 2000;
  std::optional<InitPolicy> init;

  void validate() const;
};

// Target acceptance rate for a block of dimension d.
double target_acceptance(std::size_t d);

struct EpochStats {
  bool imh = false;
  std::vector<std::size_t> proposed;  // per block
  std::vector<std::size_t> accepted;  // per block
  double sd_change = 0.0;             // mean |relative sd change| vs the previous epoch; 0 for the first
};

struct Chain {
  Family family = Family::REESCAV_EXP;
  std::vector<Param> params;        // column order
  std::vector<std::size_t> block_of;  // block index per column
  std::vector<double> draws;        // row-major iterations x params
  std::vector<std::size_t> epoch_starts;
  std::vector<EpochStats> epochs;
  std::size_t retained_begin = 0;  // first retained row
  std::uint64_t seed = 0;

  std::size_t dim() const { return params.size(); }
  std::size_t rows() const { return dim() == 0 ? 0 : draws.size() / dim(); }
  double at(std::size_t row, std::size_t col) const { return draws[row * dim() + col]; }
  ParamVector row(std::size_t r) const;
  // Retained draws of one column.
  std::vector<double> retained(std::size_t col) const;
  std::size_t retained_count() const { return rows() - retained_begin; }
};

struct McmcResult {
  Chain chain;
  ParamVector posterior_mean;
  std::vector<double> posterior_sd;  // per chain column
  std::vector<RiskForecast> forecast_draws;  // one per retained iterate
  RiskForecast forecast;                     // mean of forecast_draws
  std::size_t burnin_epochs = 0;
  bool sd_criterion_met = false;
};

// Log density of a flat parameter vector; -inf outside the support.
using LogTarget = std::function<double(std::span<const double>)>;
// Called once per retained iterate; `changed` is false when the state repeats.
using RetainedHook = std::function<void(std::span<const double> state, bool changed)>;

struct AdaptiveRun {
  std::size_t dim = 0;
  std::vector<double> draws;  // row-major iterations x dim
  std::vector<std::size_t> epoch_starts;
  std::vector<EpochStats> epochs;
  std::size_t retained_begin = 0;
  std::size_t burnin_epochs = 0;
  bool sd_criterion_met = false;
};

// Block Metropolis sampler on a generic target: random-walk mixture epochs
// with scale adaptation and covariance refresh, then an independence stage.
// `blocks` partitions the coordinates. Throws NumericalError when the start
// has a non-finite density or an epoch rejects every proposal in every block.
AdaptiveRun run_adaptive_mh(const LogTarget& target, std::vector<double> start,
                            const std::vector<std::vector<std::size_t>>& blocks, const McmcConfig& cfg,
                            const RetainedHook& on_retained = {});

// Model posterior under the indicator prior of the support.
McmcResult run_mcmc(const ModelSpec& spec, SeriesView data, const BlockLayout& layout, const McmcConfig& cfg);

// Independent chains with seeds derive_seed(cfg.seed, c). The ML start is shared.
std::vector<McmcResult> run_chains(const ModelSpec& spec, SeriesView data, const BlockLayout& layout,
                                   const McmcConfig& cfg, std::size_t n_chains, std::size_t threads);

// Potential scale reduction from between/within-chain variances.
double gelman_rubin(std::span<const std::vector<double>> chains);
// Per chain column, over retained draws.
std::vector<double> gelman_rubin(std::span<const McmcResult> results);

// Initial-positive-sequence estimator. Requires >= 100 draws and non-zero variance.
double effective_sample_size(std::span<const double> draws);

// Header `iter,block,param,value`.
void write_chain_csv(std::ostream& out, const Chain& chain);
void write_chain_csv(const std::filesystem::path& path, const Chain& chain);

}  // namespace rescav
