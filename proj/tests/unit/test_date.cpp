#include <gtest/gtest.h>

#include "rescav/date.hpp"
#include "rescav/error.hpp"

using rescav::Date;

TEST(Date, EpochAndKnownDays) {
  EXPECT_EQ(Date::from_ymd(1970, 1, 1).days(), 0);
  EXPECT_EQ(Date::from_ymd(2000, 1, 3).days(), 10959);
  EXPECT_EQ(Date::from_ymd(2016, 12, 30).days(), 17165);
}

TEST(Date, ParseFormatRoundTrip) {
  for (const char* s : {"2000-01-03", "2000-02-29", "2016-12-30", "1999-12-31", "2024-02-29"}) {
    EXPECT_EQ(Date::parse(s).to_string(), s);
  }
  const Date d = Date::parse("2008-09-15");
  EXPECT_EQ(d.year(), 2008);
  EXPECT_EQ(d.month(), 9u);
  EXPECT_EQ(d.day(), 15u);
}

TEST(Date, Weekdays) {
  EXPECT_EQ(Date::parse("2000-01-03").weekday(), 0u);  // Monday
  EXPECT_EQ(Date::parse("2016-12-30").weekday(), 4u);  // Friday
  EXPECT_EQ(Date::parse("2016-12-30").next_weekday().to_string(), "2017-01-02");
  EXPECT_EQ(Date::parse("2000-01-03").next_weekday().to_string(), "2000-01-04");
  EXPECT_EQ(Date::parse("2000-01-08").next_weekday().to_string(), "2000-01-10");
}

TEST(Date, RejectsMalformed) {
  for (const char* s : {"", "2000-1-03", "2000/01/03", "2001-02-29", "2000-13-01", "2000-01-32", "20000103",
                        "2000-01-03x"}) {
    EXPECT_THROW(Date::parse(s), rescav::ParseError) << s;
  }
}

TEST(Date, Ordering) {
  EXPECT_LT(Date::parse("2000-01-03"), Date::parse("2000-01-04"));
  EXPECT_EQ(Date::parse("2000-01-03"), Date::from_days(10959));
}
