#include "rescav/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include <json.hpp>

#include "rescav/error.hpp"
#include "rescav/log.hpp"

namespace rescav {

namespace {

using json = nlohmann::json;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string where(std::size_t line_no) { return "line " + std::to_string(line_no) + ": "; }

double parse_number(std::string_view s, std::size_t line_no, std::string_view column) {
  if (s == "nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError(where(line_no) + "invalid number '" + std::string(s) + "' in column " + std::string(column));
  }
  return v;
}

long parse_integer(std::string_view s, std::size_t line_no, std::string_view column) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError(where(line_no) + "invalid integer '" + std::string(s) + "' in column " + std::string(column));
  }
  return v;
}

Date parse_date(std::string_view s, std::size_t line_no) {
  try {
    return Date::parse(s);
  } catch (const ParseError& e) {
    throw ParseError(where(line_no) + e.what());
  }
}

// Header → column index map; required columns must be present.
class Header {
 public:
  Header(std::string_view line, std::initializer_list<std::string_view> required) {
    const auto cols = split(line);
    for (std::size_t i = 0; i < cols.size(); ++i) index_.emplace(std::string(cols[i]), i);
    for (auto name : required) {
      if (!index_.contains(std::string(name))) {
        throw SchemaError("missing required column '" + std::string(name) + "' in header '" + std::string(line) + "'");
      }
    }
    width_ = cols.size();
  }
  std::optional<std::size_t> find(std::string_view name) const {
    const auto it = index_.find(std::string(name));
    return it == index_.end() ? std::nullopt : std::optional<std::size_t>(it->second);
  }
  std::size_t at(std::string_view name) const { return *find(name); }
  std::size_t width() const { return width_; }

 private:
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t width_ = 0;
};

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// Reads the first non-empty line. Returns false on an empty stream.
bool read_header(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) return true;
  }
  return false;
}

void check_width(const std::vector<std::string_view>& cells, const Header& h, std::size_t line_no) {
  if (cells.size() != h.width()) {
    throw ParseError(where(line_no) + "expected " + std::to_string(h.width()) + " fields, found " +
                     std::to_string(cells.size()));
  }
}

json test_json(const std::optional<TestResult>& t) {
  if (!t) return nullptr;
  return json{{"stat", t->stat}, {"pvalue", t->pvalue}, {"reject_5pct", t->reject_5pct}};
}

std::optional<TestResult> test_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return TestResult{j.at("stat").get<double>(), j.at("pvalue").get<double>(), j.at("reject_5pct").get<bool>()};
}

}  // namespace

double IntradayDay::high() const {
  double h = ticks.front().high;
  for (const auto& t : ticks) h = std::max({h, t.high, t.price});
  return h;
}

double IntradayDay::low() const {
  double l = ticks.front().low;
  for (const auto& t : ticks) l = std::min({l, t.low, t.price});
  return l;
}

const Tick* IntradayDay::at(int minute) const {
  const auto it = std::lower_bound(ticks.begin(), ticks.end(), minute,
                                   [](const Tick& t, int m) { return t.minute < m; });
  return it != ticks.end() && it->minute == minute ? &*it : nullptr;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("number formatting failed");
  return std::string(buf, ptr);
}

std::vector<IntradayDay> parse_intraday(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!read_header(in, line, line_no)) return {};
  const Header h(line, {"date", "minute", "price"});
  const auto c_date = h.at("date"), c_minute = h.at("minute"), c_price = h.at("price");
  const auto c_high = h.find("high"), c_low = h.find("low");

  std::map<Date, std::vector<Tick>> by_date;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    check_width(cells, h, line_no);
    const Date date = parse_date(cells[c_date], line_no);
    Tick tick;
    const long minute = parse_integer(cells[c_minute], line_no, "minute");
    if (minute < 0 || minute > std::numeric_limits<int>::max()) {
      throw ParseError(where(line_no) + "minute offset out of range");
    }
    tick.minute = static_cast<int>(minute);
    tick.price = parse_number(cells[c_price], line_no, "price");
    tick.high = c_high && !cells[*c_high].empty() ? parse_number(cells[*c_high], line_no, "high") : tick.price;
    tick.low = c_low && !cells[*c_low].empty() ? parse_number(cells[*c_low], line_no, "low") : tick.price;
    if (!(tick.price > 0.0) || !(tick.high > 0.0) || !(tick.low > 0.0) || !std::isfinite(tick.price) ||
        !std::isfinite(tick.high) || !std::isfinite(tick.low)) {
      throw DataError(where(line_no) + "non-positive price");
    }
    if (tick.high < tick.low) throw DataError(where(line_no) + "high below low");
    by_date[date].push_back(tick);
  }

  std::vector<IntradayDay> days;
  days.reserve(by_date.size());
  for (auto& [date, ticks] : by_date) {
    std::sort(ticks.begin(), ticks.end(), [](const Tick& a, const Tick& b) { return a.minute < b.minute; });
    for (std::size_t i = 1; i < ticks.size(); ++i) {
      if (ticks[i].minute == ticks[i - 1].minute) {
        throw DataError("duplicate tick at " + date.to_string() + " minute " + std::to_string(ticks[i].minute));
      }
    }
    if (ticks.size() < 2) {
      log_warning("dropping " + date.to_string() + ": fewer than 2 ticks");
      continue;
    }
    days.push_back(IntradayDay{date, std::move(ticks)});
  }
  return days;
}

std::vector<IntradayDay> load_intraday(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_intraday(in);
}

std::vector<DatedReturn> daily_returns(std::span<const DatedClose> closes) {
  if (closes.size() < 2) throw InvalidArgument("daily_returns needs at least 2 closes");
  for (const auto& c : closes) {
    if (!(c.close > 0.0)) throw DataError("non-positive close on " + c.date.to_string());
  }
  std::vector<DatedReturn> out;
  out.reserve(closes.size() - 1);
  for (std::size_t i = 1; i < closes.size(); ++i) {
    out.push_back({closes[i].date, std::log(closes[i].close) - std::log(closes[i - 1].close)});
  }
  return out;
}

void write_daily(std::ostream& out, std::span<const DailyRecord> records) {
  out << "date,return,measure\n";
  for (const auto& r : records) {
    out << r.date.to_string() << ',' << format_double(r.ret) << ',' << format_double(r.measure) << '\n';
  }
}

void write_daily(const std::filesystem::path& path, std::span<const DailyRecord> records) {
  auto out = open_out(path);
  write_daily(out, records);
  finish(out, path);
}

std::vector<DailyRecord> parse_daily(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!read_header(in, line, line_no)) return {};
  const Header h(line, {"date", "return", "measure"});
  const auto c_date = h.at("date"), c_ret = h.at("return"), c_meas = h.at("measure");
  std::vector<DailyRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    check_width(cells, h, line_no);
    DailyRecord r{parse_date(cells[c_date], line_no), parse_number(cells[c_ret], line_no, "return"),
                  parse_number(cells[c_meas], line_no, "measure")};
    if (!std::isfinite(r.ret)) throw DataError(where(line_no) + "non-finite return");
    if (!(r.measure >= 0.0)) throw DataError(where(line_no) + "measure must be non-negative");
    if (!out.empty() && !(out.back().date < r.date)) throw DataError(where(line_no) + "dates must be strictly increasing");
    out.push_back(r);
  }
  return out;
}

std::vector<DailyRecord> load_daily(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_daily(in);
}

void write_forecasts(std::ostream& out, std::span<const ForecastRecord> records) {
  out << "date,var,es,model,alpha,origin,flag\n";
  for (const auto& r : records) {
    out << r.date.to_string() << ',' << format_double(r.var) << ',' << format_double(r.es) << ',' << r.model << ','
        << format_double(r.alpha) << ',' << r.origin << ',' << (r.flag == ForecastFlag::ok ? "ok" : "failed") << '\n';
  }
}

void write_forecasts(const std::filesystem::path& path, std::span<const ForecastRecord> records) {
  auto out = open_out(path);
  write_forecasts(out, records);
  finish(out, path);
}

std::vector<ForecastRecord> parse_forecasts(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!read_header(in, line, line_no)) return {};
  const Header h(line, {"date", "var", "es", "model", "alpha"});
  const auto c_origin = h.find("origin"), c_flag = h.find("flag");
  std::vector<ForecastRecord> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    check_width(cells, h, line_no);
    ForecastRecord r;
    r.date = parse_date(cells[h.at("date")], line_no);
    r.var = parse_number(cells[h.at("var")], line_no, "var");
    r.es = parse_number(cells[h.at("es")], line_no, "es");
    r.model = std::string(cells[h.at("model")]);
    r.alpha = parse_number(cells[h.at("alpha")], line_no, "alpha");
    if (c_origin) r.origin = static_cast<std::size_t>(parse_integer(cells[*c_origin], line_no, "origin"));
    if (c_flag) {
      const auto f = cells[*c_flag];
      if (f == "ok") {
        r.flag = ForecastFlag::ok;
      } else if (f == "failed") {
        r.flag = ForecastFlag::failed;
      } else {
        throw ParseError(where(line_no) + "flag must be ok or failed");
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ForecastRecord> load_forecasts(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_forecasts(in);
}

std::string report_to_json(const BacktestReport& r) {
  json j;
  j["model"] = r.model;
  j["alpha"] = r.alpha;
  j["m"] = r.m;
  j["vrate"] = r.vrate;
  j["n_violations"] = r.n_violations;
  j["es_rate"] = r.es_rate;
  j["quantile_loss"] = r.quantile_loss;
  j["joint_loss"] = r.joint_loss;
  j["uc"] = test_json(r.uc);
  j["cc"] = test_json(r.cc);
  j["dq1"] = test_json(r.dq1);
  j["dq4"] = test_json(r.dq4);
  j["vqr"] = test_json(r.vqr);
  j["flags"] = r.flags;
  return j.dump(2) + "\n";
}

BacktestReport report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("report JSON: ") + e.what());
  }
  try {
    BacktestReport r;
    r.model = j.value("model", std::string());
    r.alpha = j.value("alpha", 0.0);
    r.m = j.value("m", std::size_t{0});
    r.vrate = j.at("vrate").get<double>();
    r.n_violations = j.at("n_violations").get<std::size_t>();
    r.es_rate = j.value("es_rate", 0.0);
    r.quantile_loss = j.at("quantile_loss").get<double>();
    r.joint_loss = j.at("joint_loss").get<double>();
    r.uc = test_from_json(j.at("uc"));
    r.cc = test_from_json(j.at("cc"));
    r.dq1 = test_from_json(j.at("dq1"));
    r.dq4 = test_from_json(j.at("dq4"));
    r.vqr = test_from_json(j.at("vqr"));
    r.flags = j.at("flags").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("report JSON: ") + e.what());
  }
}

void write_report(const std::filesystem::path& path, const BacktestReport& report) {
  write_text(path, report_to_json(report));
}

std::string mcs_to_json(const McsResult& r) {
  json j;
  j["method"] = r.method == McsMethod::R ? "R" : "SQ";
  j["level"] = r.level;
  j["survivors"] = r.survivors;
  j["eliminations"] = json::array();
  for (const auto& e : r.eliminations) j["eliminations"].push_back({{"model", e.model}, {"pvalue", e.pvalue}});
  j["sequence"] = json::array();
  for (const auto& e : r.sequence) j["sequence"].push_back({{"model", e.model}, {"pvalue", e.pvalue}});
  return j.dump(2) + "\n";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  finish(out, path);
}

std::string read_text(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace rescav
