#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rescav/mcmc.hpp"
#include "rescav/mle.hpp"
#include "rescav/model.hpp"

namespace rescav {

struct Estimate {
  ParamVector params;
  // Set when the estimator produces its own forecast (MCMC posterior mean);
  // otherwise callers plug `params` into forecast_one.
  std::optional<RiskForecast> forecast;
  std::vector<std::string> flags;
};

class Estimator {
 public:
  virtual ~Estimator() = default;
  virtual std::string name() const = 0;
  // `warm` is the previous fit on an overlapping window, if any.
  virtual Estimate fit(const ModelSpec& spec, SeriesView window, std::uint64_t seed,
                       const std::optional<ParamVector>& warm) const = 0;
  // True when fit() uses `warm`; rolling forecasts then refit sequentially.
  virtual bool uses_warm_start() const { return false; }
};

// Returns fixed parameters (the true-parameter stub of simulation checks).
class FixedEstimator final : public Estimator {
 public:
  explicit FixedEstimator(ParamVector params) : params_(params) {}
  std::string name() const override { return "fixed"; }
  Estimate fit(const ModelSpec& spec, SeriesView window, std::uint64_t seed,
               const std::optional<ParamVector>& warm) const override;

 private:
  ParamVector params_;
};

class MlEstimator final : public Estimator {
 public:
  // With warm starts enabled, refits after the first use `warm_candidates`
  // random candidates plus the previous estimate.
  explicit MlEstimator(MleConfig cfg, bool warm_start = false, std::size_t warm_candidates = 500)
      : cfg_(std::move(cfg)), warm_start_(warm_start), warm_candidates_(warm_candidates) {}
  std::string name() const override { return "ml"; }
  Estimate fit(const ModelSpec& spec, SeriesView window, std::uint64_t seed,
               const std::optional<ParamVector>& warm) const override;
  bool uses_warm_start() const override { return warm_start_; }

 private:
  MleConfig cfg_;
  bool warm_start_;
  std::size_t warm_candidates_;
};

class McmcEstimator final : public Estimator {
 public:
  explicit McmcEstimator(McmcConfig cfg) : cfg_(std::move(cfg)) {}
  std::string name() const override { return "mcmc"; }
  Estimate fit(const ModelSpec& spec, SeriesView window, std::uint64_t seed,
               const std::optional<ParamVector>& warm) const override;

 private:
  McmcConfig cfg_;
};

}  // namespace rescav
