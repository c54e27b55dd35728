#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rescav/date.hpp"
#include "rescav/report.hpp"

namespace rescav {

// One intraday observation. `minute` counts from the session open; `high`/`low`
// are the extremes within that minute and equal `price` when not recorded.
struct Tick {
  int minute = 0;
  double price = 0.0;
  double high = 0.0;
  double low = 0.0;
};

struct IntradayDay {
  Date date;
  std::vector<Tick> ticks;  // strictly increasing minutes, at least two

  double open() const { return ticks.front().price; }
  double close() const { return ticks.back().price; }
  double high() const;
  double low() const;
  // Tick at an exact minute, or nullptr.
  const Tick* at(int minute) const;
};

struct DailyRecord {
  Date date;
  double ret = 0.0;      // daily log return
  double measure = 0.0;  // realized measure on the return scale, >= 0

  friend bool operator==(const DailyRecord&, const DailyRecord&) = default;
};

struct DatedClose {
  Date date;
  double close = 0.0;
};

struct DatedReturn {
  Date date;
  double ret = 0.0;
};

enum class ForecastFlag { ok, failed };

struct ForecastRecord {
  Date date;
  double var = 0.0;
  double es = 0.0;
  std::string model;
  double alpha = 0.0;
  std::size_t origin = 0;  // index of the last in-sample record
  ForecastFlag flag = ForecastFlag::ok;

  friend bool operator==(const ForecastRecord&, const ForecastRecord&) = default;
};

// Shortest text form that parses back to the identical double.
std::string format_double(double v);

std::vector<IntradayDay> parse_intraday(std::istream& in);
std::vector<IntradayDay> load_intraday(const std::filesystem::path& path);

// r_t = log C_t - log C_{t-1}; output has one element fewer than the input.
std::vector<DatedReturn> daily_returns(std::span<const DatedClose> closes);

void write_daily(std::ostream& out, std::span<const DailyRecord> records);
void write_daily(const std::filesystem::path& path, std::span<const DailyRecord> records);
std::vector<DailyRecord> parse_daily(std::istream& in);
std::vector<DailyRecord> load_daily(const std::filesystem::path& path);

void write_forecasts(std::ostream& out, std::span<const ForecastRecord> records);
void write_forecasts(const std::filesystem::path& path, std::span<const ForecastRecord> records);
std::vector<ForecastRecord> parse_forecasts(std::istream& in);
std::vector<ForecastRecord> load_forecasts(const std::filesystem::path& path);

std::string report_to_json(const BacktestReport& report);
BacktestReport report_from_json(const std::string& text);
void write_report(const std::filesystem::path& path, const BacktestReport& report);

std::string mcs_to_json(const McsResult& result);

// Writes `text` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace rescav
