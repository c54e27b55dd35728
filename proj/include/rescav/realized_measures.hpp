#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rescav/data_io.hpp"

namespace rescav {

enum class MeasureKind { RV, RR, ScRV, ScRR, SSRV, SSRR, AbsReturn, DailyRange };
enum class OutputScale { variance, volatility };

MeasureKind parse_measure_kind(std::string_view name);  // case-insensitive: rv, rr, scrv, ..., absreturn, dailyrange
std::string to_string(MeasureKind kind);

struct MeasureConfig {
  MeasureKind kind = MeasureKind::SSRR;
  int freq = 5;    // base sampling frequency in minutes
  int offset = 1;  // sub-sampling shift in minutes
  int q = 66;      // scaling window in days
  OutputScale scale = OutputScale::volatility;

  void validate() const;
};

// All per-day measures are on the variance scale and throw DataError when a
// required grid point is missing. The grid for shift s is {s, s+freq, ...} up
// to the last recorded minute of the day.
double rv(const IntradayDay& day, int freq);
// Interval extremes span both grid endpoints: the opening price at the left
// endpoint and every tick (price, high, low) after it up to the right endpoint.
double rr(const IntradayDay& day, int freq);
double subsampled_rv(const IntradayDay& day, int freq, int offset);
double subsampled_rr(const IntradayDay& day, int freq, int offset);

// Parkinson estimator of the daily range, (log H - log L)^2 / (4 log 2).
double daily_range_variance(const IntradayDay& day);

// out_t = (sum_{l=1..q} proxy_{t-l} / sum_{l=1..q} measure_{t-l}) * measure_t.
// The first q entries are unavailable.
std::vector<std::optional<double>> scale(std::span<const double> measure, std::span<const double> proxy, int q);

std::vector<DailyRecord> build_measure_series(std::span<const IntradayDay> days, const MeasureConfig& cfg);

}  // namespace rescav
