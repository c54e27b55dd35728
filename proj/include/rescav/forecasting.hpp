#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rescav/data_io.hpp"
#include "rescav/estimator.hpp"
#include "rescav/model.hpp"

namespace rescav {

struct RollingConfig {
  std::size_t window = 1000;
  std::size_t stride = 1;  // re-estimate every `stride` origins
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string model_id;  // written to each record; defaults to the family name
};

// For each origin t = window-1 .. N-2 (0-based), uses records t-window+1..t to
// forecast day t+1. Parameters are refit at every `stride`-th origin with seed
// derive_seed(seed, t) and reused in between; the filter always runs on the
// current window. Origins whose fit (or forecast) fails are flagged `failed`
// with NaN values.
std::vector<ForecastRecord> rolling_forecast(const ModelSpec& spec, std::span<const DailyRecord> data,
                                             const Estimator& estimator, const RollingConfig& cfg);

}  // namespace rescav
