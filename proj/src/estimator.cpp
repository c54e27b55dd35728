#include "rescav/estimator.hpp"

#include "rescav/error.hpp"

namespace rescav {

Estimate FixedEstimator::fit(const ModelSpec& spec, SeriesView, std::uint64_t,
                             const std::optional<ParamVector>&) const {
  if (params_.family != spec.family) throw InvalidArgument("fixed estimator: parameter family mismatch");
  return Estimate{params_, std::nullopt, {}};
}

Estimate MlEstimator::fit(const ModelSpec& spec, SeriesView window, std::uint64_t seed,
                          const std::optional<ParamVector>& warm) const {
  MleConfig cfg = cfg_;
  cfg.seed = seed;
  if (warm_start_ && warm) {
    cfg.n_candidates = warm_candidates_;
    cfg.extra_candidates.push_back(*warm);
  }
  MleResult r = fit_ml(spec, window, cfg);
  return Estimate{r.params, std::nullopt, std::move(r.flags)};
}

Estimate McmcEstimator::fit(const ModelSpec& spec, SeriesView window, std::uint64_t seed,
                            const std::optional<ParamVector>&) const {
  McmcConfig cfg = cfg_;
  cfg.seed = seed;
  McmcResult r = run_mcmc(spec, window, BlockLayout::defaults(spec.family), cfg);
  Estimate e{r.posterior_mean, r.forecast, {}};
  if (!r.sd_criterion_met) e.flags.emplace_back("mcmc-max-epochs");
  return e;
}

}  // namespace rescav
