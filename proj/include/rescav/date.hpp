#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace rescav {

// Proleptic Gregorian calendar date, stored as days since 1970-01-01.
class Date {
 public:
  constexpr Date() = default;
  static Date from_ymd(int year, unsigned month, unsigned day);
  static Date from_days(std::int64_t days) { Date d; d.days_ = days; return d; }
  // Accepts YYYY-MM-DD; throws ParseError otherwise.
  static Date parse(std::string_view text);

  std::int64_t days() const { return days_; }
  int year() const;
  unsigned month() const;
  unsigned day() const;
  // 0 = Monday ... 6 = Sunday.
  unsigned weekday() const;

  Date plus_days(std::int64_t n) const { return from_days(days_ + n); }
  Date next_weekday() const;

  std::string to_string() const;

  friend constexpr auto operator<=>(const Date&, const Date&) = default;

 private:
  std::int64_t days_ = 0;
};

}  // namespace rescav
