// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include "geotag/temporal/time.hpp"

#include <cctype>
#include <cstdio>

namespace geotag::temporal {

namespace {

bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && leap(y) ? 29 : kDays[m - 1];
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); }

class Cursor {
 public:
  explicit Cursor(std::string_view s) : s_(s) {}

  [[noreturn]] void fail(const std::string& why) const {
    throw TimeParseError("cannot parse timestamp '" + std::string(s_) + "': " + why);
  }
  bool done() const { return pos_ >= s_.size(); }
  char peek() const { return done() ? '\0' : s_[pos_]; }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  bool accept(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }
  int digits(std::size_t n) {
    int v = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (done() || !std::isdigit(static_cast<unsigned char>(s_[pos_]))) fail("expected a digit");
      v = v * 10 + (s_[pos_++] - '0');
    }
    return v;
  }
  void skip_digits() {
    while (!done() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::int64_t days_from_civil(int year, int month, int day) {
  // Days since 1970-01-01 using a March-based year so the leap day is last.
  const std::int64_t y = static_cast<std::int64_t>(year) - (month <= 2 ? 1 : 0);
  const std::int64_t era = floor_div(y, 400);
  const std::int64_t yoe = y - era * 400;
  const std::int64_t mp = (month + 9) % 12;
  const std::int64_t doy = (153 * mp + 2) / 5 + day - 1;
  const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

CivilTime civil_from_unix(std::int64_t seconds) {
  const std::int64_t days = floor_div(seconds, 86400);
  std::int64_t rem = seconds - days * 86400;
  const std::int64_t z = days + 719468;
  const std::int64_t era = floor_div(z, 146097);
  const std::int64_t doe = z - era * 146097;
  const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const std::int64_t mp = (5 * doy + 2) / 153;
  CivilTime t;
  t.day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  t.month = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  t.year = static_cast<int>(yoe + era * 400 + (t.month <= 2 ? 1 : 0));
  t.hour = static_cast<int>(rem / 3600);
  rem %= 3600;
  t.minute = static_cast<int>(rem / 60);
  t.second = static_cast<int>(rem % 60);
  return t;
}

std::int64_t unix_from_civil(const CivilTime& t) {
  return days_from_civil(t.year, t.month, t.day) * 86400 + t.hour * 3600 + t.minute * 60 + t.second;
}

int weekday_of(const CivilTime& t) {
  // 1970-01-01 was a Thursday (Monday = 0 -> 3).
  const std::int64_t d = days_from_civil(t.year, t.month, t.day);
  return static_cast<int>(((d + 3) % 7 + 7) % 7);
}

CivilTime parse_iso8601(std::string_view text) {
  Cursor c(text);
  CivilTime t;
  t.year = c.digits(4);
  c.expect('-');
  t.month = c.digits(2);
  c.expect('-');
  t.day = c.digits(2);
  if (!c.accept('T') && !c.accept('t') && !c.accept(' ')) c.fail("expected 'T' between date and time");
  t.hour = c.digits(2);
  c.expect(':');
  t.minute = c.digits(2);
  if (c.accept(':')) {
    t.second = c.digits(2);
    if (c.accept('.') || c.accept(',')) c.skip_digits();
  }
  int offset_min = 0;
  const bool zulu = c.accept('Z') || c.accept('z');
  if (!zulu && (c.peek() == '+' || c.peek() == '-')) {
    const int sign = c.peek() == '-' ? -1 : 1;
    c.accept(c.peek());
    const int oh = c.digits(2);
    c.accept(':');
    const int om = c.digits(2);
    if (oh > 23 || om > 59) c.fail("offset out of range");
    offset_min = sign * (oh * 60 + om);
  }
  if (!c.done()) c.fail("trailing characters");
  if (t.month < 1 || t.month > 12) c.fail("month out of range");
  if (t.day < 1 || t.day > days_in_month(t.year, t.month)) c.fail("day out of range");
  if (t.hour > 23 || t.minute > 59 || t.second > 60) c.fail("time of day out of range");
  // Leap seconds fold into the following minute.
  if (offset_min == 0 && t.second < 60) return t;
  return civil_from_unix(unix_from_civil(t) - offset_min * 60);
}

std::string to_iso8601(const CivilTime& t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", t.year, t.month, t.day, t.hour, t.minute,
                t.second);
  return buf;
}

TimeElements decompose_timestamp(std::string_view iso) {
  const CivilTime t = parse_iso8601(iso);
  return {t.minute, t.hour, weekday_of(t), t.month - 1};
}

std::string time_as_text(std::string_view iso) {
  const CivilTime t = parse_iso8601(iso);
  return "y" + std::to_string(t.year) + " m" + std::to_string(t.month) + " d" + std::to_string(t.day) + " h" +
         std::to_string(t.hour) + " min" + std::to_string(t.minute) + " w" + std::to_string(weekday_of(t));
}

}  // namespace geotag::temporal
