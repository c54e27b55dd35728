#include "rescav/realized_measures.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "rescav/error.hpp"
#include "rescav/log.hpp"

namespace rescav {

namespace {

const double kFourLog2 = 4.0 * std::numbers::ln2;

const Tick& grid_tick(const IntradayDay& day, int minute) {
  const Tick* t = day.at(minute);
  if (t == nullptr) {
    throw DataError("missing grid point at minute " + std::to_string(minute) + " on " + day.date.to_string());
  }
  return *t;
}

// Grid {shift, shift+freq, ...} up to the last tick. Needs at least one interval.
std::vector<int> grid(const IntradayDay& day, int freq, int shift) {
  const int last = day.ticks.back().minute;
  if (last - shift < freq) {
    throw DataError("no complete " + std::to_string(freq) + "-minute interval at shift " + std::to_string(shift) +
                    " on " + day.date.to_string());
  }
  std::vector<int> points;
  for (int m = shift; m <= last; m += freq) points.push_back(m);
  return points;
}

double shifted_rv(const IntradayDay& day, int freq, int shift) {
  const auto points = grid(day, freq, shift);
  double sum = 0.0;
  double prev = std::log(grid_tick(day, points.front()).price);
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double cur = std::log(grid_tick(day, points[i]).price);
    sum += (cur - prev) * (cur - prev);
    prev = cur;
  }
  return sum;
}

// Sum of squared log ranges, without the 4 log 2 normalisation.
double shifted_rr_raw(const IntradayDay& day, int freq, int shift) {
  const auto points = grid(day, freq, shift);
  for (int p : points) grid_tick(day, p);
  double sum = 0.0;
  auto it = day.ticks.begin();
  for (std::size_t i = 1; i < points.size(); ++i) {
    const int a = points[i - 1], b = points[i];
    while (it->minute < a) ++it;
    double hi = it->price, lo = it->price;
    for (auto j = it + 1; j != day.ticks.end() && j->minute <= b; ++j) {
      hi = std::max({hi, j->high, j->price});
      lo = std::min({lo, j->low, j->price});
    }
    const double d = std::log(hi) - std::log(lo);
    sum += d * d;
  }
  return sum;
}

void check_freq(int freq, int offset) {
  if (freq <= 0 || offset <= 0 || freq % offset != 0) {
    throw InvalidArgument("frequency must be a positive multiple of the sub-sampling offset");
  }
}

double variance_measure(const IntradayDay& day, const MeasureConfig& cfg) {
  switch (cfg.kind) {
    case MeasureKind::RV:
    case MeasureKind::ScRV:
      return rv(day, cfg.freq);
    case MeasureKind::RR:
    case MeasureKind::ScRR:
      return rr(day, cfg.freq);
    case MeasureKind::SSRV:
      return subsampled_rv(day, cfg.freq, cfg.offset);
    case MeasureKind::SSRR:
      return subsampled_rr(day, cfg.freq, cfg.offset);
    case MeasureKind::DailyRange:
      return daily_range_variance(day);
    case MeasureKind::AbsReturn:
      break;
  }
  return 0.0;
}

}  // namespace

MeasureKind parse_measure_kind(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "rv") return MeasureKind::RV;
  if (s == "rr") return MeasureKind::RR;
  if (s == "scrv") return MeasureKind::ScRV;
  if (s == "scrr") return MeasureKind::ScRR;
  if (s == "ssrv") return MeasureKind::SSRV;
  if (s == "ssrr") return MeasureKind::SSRR;
  if (s == "absreturn" || s == "abs") return MeasureKind::AbsReturn;
  if (s == "dailyrange" || s == "range") return MeasureKind::DailyRange;
  throw InvalidArgument("unknown measure kind '" + std::string(name) + "'");
}

std::string to_string(MeasureKind kind) {
  switch (kind) {
    case MeasureKind::RV: return "rv";
    case MeasureKind::RR: return "rr";
    case MeasureKind::ScRV: return "scrv";
    case MeasureKind::ScRR: return "scrr";
    case MeasureKind::SSRV: return "ssrv";
    case MeasureKind::SSRR: return "ssrr";
    case MeasureKind::AbsReturn: return "absreturn";
    case MeasureKind::DailyRange: return "dailyrange";
  }
  return "?";
}

void MeasureConfig::validate() const {
  check_freq(freq, offset);
  if (q < 1) throw InvalidArgument("scaling window q must be >= 1");
}

double rv(const IntradayDay& day, int freq) {
  check_freq(freq, freq);
  return shifted_rv(day, freq, 0);
}

double rr(const IntradayDay& day, int freq) {
  check_freq(freq, freq);
  return shifted_rr_raw(day, freq, 0) / kFourLog2;
}

double subsampled_rv(const IntradayDay& day, int freq, int offset) {
  check_freq(freq, offset);
  const int nk = freq / offset;
  double sum = 0.0;
  for (int i = 0; i < nk; ++i) sum += shifted_rv(day, freq, i * offset);
  return sum / nk;
}

double subsampled_rr(const IntradayDay& day, int freq, int offset) {
  check_freq(freq, offset);
  const int nk = freq / offset;
  double sum = 0.0;
  for (int i = 0; i < nk; ++i) sum += shifted_rr_raw(day, freq, i * offset);
  return sum / (kFourLog2 * nk);
}

double daily_range_variance(const IntradayDay& day) {
  const double d = std::log(day.high()) - std::log(day.low());
  return d * d / kFourLog2;
}

std::vector<std::optional<double>> scale(std::span<const double> measure, std::span<const double> proxy, int q) {
  if (q < 1) throw InvalidArgument("scaling window q must be >= 1");
  if (measure.size() != proxy.size()) throw InvalidArgument("measure and proxy series differ in length");
  std::vector<std::optional<double>> out(measure.size());
  for (std::size_t t = static_cast<std::size_t>(q); t < measure.size(); ++t) {
    double num = 0.0, den = 0.0;
    for (std::size_t l = 1; l <= static_cast<std::size_t>(q); ++l) {
      num += proxy[t - l];
      den += measure[t - l];
    }
    if (!(den > 0.0)) throw NumericalError("scaling denominator is zero at index " + std::to_string(t));
    out[t] = num / den * measure[t];
  }
  return out;
}

std::vector<DailyRecord> build_measure_series(std::span<const IntradayDay> days, const MeasureConfig& cfg) {
  cfg.validate();
  if (days.size() < 2) return {};

  // Day i >= 1 carries r_i from consecutive closes; a day whose grid is
  // incomplete keeps its close for the next return but yields no record.
  struct Row {
    Date date;
    double ret;
    double measure;  // variance scale
    double proxy;    // daily proxy for scaling
  };
  std::vector<Row> rows;
  rows.reserve(days.size());
  for (std::size_t i = 1; i < days.size(); ++i) {
    const double ret = std::log(days[i].close()) - std::log(days[i - 1].close());
    double v = 0.0;
    if (cfg.kind == MeasureKind::AbsReturn) {
      v = ret * ret;
    } else {
      try {
        v = variance_measure(days[i], cfg);
      } catch (const DataError& e) {
        log_warning(std::string("dropping day: ") + e.what());
        continue;
      }
    }
    double proxy = 0.0;
    if (cfg.kind == MeasureKind::ScRV) proxy = ret * ret;
    if (cfg.kind == MeasureKind::ScRR) proxy = daily_range_variance(days[i]);
    rows.push_back({days[i].date, ret, v, proxy});
  }

  std::vector<std::optional<double>> values(rows.size());
  if (cfg.kind == MeasureKind::ScRV || cfg.kind == MeasureKind::ScRR) {
    std::vector<double> m(rows.size()), p(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      m[i] = rows[i].measure;
      p[i] = rows[i].proxy;
    }
    values = scale(m, p, cfg.q);
  } else {
    for (std::size_t i = 0; i < rows.size(); ++i) values[i] = rows[i].measure;
  }

  std::vector<DailyRecord> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!values[i]) continue;
    const double v = *values[i];
    out.push_back({rows[i].date, rows[i].ret, cfg.scale == OutputScale::volatility ? std::sqrt(v) : v});
  }
  return out;
}

}  // namespace rescav
