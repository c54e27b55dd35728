#include "rescav/forecasting.hpp"

#include <cmath>
#include <optional>
#include <string>

#include "rescav/error.hpp"
#include "rescav/log.hpp"
#include "rescav/parallel.hpp"
#include "rescav/rng.hpp"

namespace rescav {

namespace {

struct Fit {
  std::optional<Estimate> estimate;
  std::string error;
};

}  // namespace

std::vector<ForecastRecord> rolling_forecast(const ModelSpec& spec, std::span<const DailyRecord> data,
                                             const Estimator& estimator, const RollingConfig& cfg) {
  spec.validate();
  if (cfg.window < 3) throw InvalidArgument("rolling window must hold at least three records");
  if (cfg.stride == 0) throw InvalidArgument("re-estimation stride must be positive");
  if (data.size() < cfg.window + 1) throw InvalidArgument("need at least window + 1 records");

  std::vector<double> r(data.size()), x(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    r[i] = data[i].ret;
    x[i] = data[i].measure;
  }
  const SeriesView all{r, is_realized(spec.family) ? std::span<const double>(x) : std::span<const double>()};
  const std::size_t first = cfg.window - 1;
  const std::size_t n_out = data.size() - cfg.window;
  const std::size_t n_fits = (n_out + cfg.stride - 1) / cfg.stride;
  auto window_at = [&](std::size_t origin) { return all.window(origin + 1 - cfg.window, cfg.window); };

  std::vector<Fit> fits(n_fits);
  auto do_fit = [&](std::size_t k, const std::optional<ParamVector>& warm) {
    const std::size_t origin = first + k * cfg.stride;
    try {
      fits[k].estimate = estimator.fit(spec, window_at(origin), derive_seed(cfg.seed, origin), warm);
    } catch (const Error& e) {
      fits[k].error = e.what();
    }
  };
  if (estimator.uses_warm_start()) {
    std::optional<ParamVector> warm;
    for (std::size_t k = 0; k < n_fits; ++k) {
      do_fit(k, warm);
      if (fits[k].estimate) warm = fits[k].estimate->params;
    }
  } else {
    parallel_for(n_fits, cfg.threads, [&](std::size_t k) { do_fit(k, std::nullopt); });
  }

  const std::string model = cfg.model_id.empty() ? to_string(spec.family) : cfg.model_id;
  std::vector<ForecastRecord> out(n_out);
  parallel_for(n_out, cfg.threads, [&](std::size_t i) {
    const std::size_t origin = first + i;
    const Fit& fit = fits[i / cfg.stride];
    ForecastRecord& rec = out[i];
    rec.date = data[origin + 1].date;
    rec.model = model;
    rec.alpha = spec.alpha;
    rec.origin = origin;
    rec.var = std::nan("");
    rec.es = std::nan("");
    rec.flag = ForecastFlag::failed;
    if (!fit.estimate) return;
    const Estimate& est = *fit.estimate;
    if (i % cfg.stride == 0 && est.forecast) {
      rec.var = est.forecast->var;
      rec.es = est.forecast->es;
      rec.flag = ForecastFlag::ok;
      return;
    }
    try {
      const SeriesView w = window_at(origin);
      const FilterOutput fo = filter(spec, est.params, w, InitPolicy::empirical(w.returns, spec.alpha));
      const RiskForecast f = forecast_one(spec, est.params, w, fo);
      rec.var = f.var;
      rec.es = f.es;
      rec.flag = ForecastFlag::ok;
    } catch (const Error&) {
    }
  });

  std::size_t failed = 0;
  for (const auto& rec : out) failed += rec.flag == ForecastFlag::failed ? 1 : 0;
  if (failed > 0) log_warning(model + ": " + std::to_string(failed) + " forecast origin(s) failed and were flagged");
  return out;
}

}  // namespace rescav
