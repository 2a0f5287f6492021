// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace geotag::temporal {

class TimeParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Proleptic Gregorian date-time in UTC. month is 1-12.
struct CivilTime {
  int year = 1970;
  int month = 1;
  int day = 1;
  int hour = 0;
  int minute = 0;
  int second = 0;

  bool operator==(const CivilTime&) const = default;
};

/// Calendar fields used as model inputs. weekday: Monday = 0. month: 0-11.
struct TimeElements {
  int minute = 0;
  int hour = 0;
  int weekday = 0;
  int month = 0;

  bool operator==(const TimeElements&) const = default;
};

std::int64_t days_from_civil(int year, int month, int day);
CivilTime civil_from_unix(std::int64_t seconds);
std::int64_t unix_from_civil(const CivilTime& t);
/// Monday = 0.
int weekday_of(const CivilTime& t);

/// Parses `YYYY-MM-DD[T ]HH:MM[:SS[.frac]][Z|+HH:MM|-HH:MM|+HHMM]` and converts
/// to UTC. A timestamp without an offset is taken to be UTC already.
CivilTime parse_iso8601(std::string_view text);
std::string to_iso8601(const CivilTime& t);

TimeElements decompose_timestamp(std::string_view iso);

/// "y<year> m<month> d<day> h<hour> min<minute> w<weekday>" with a 1-based
/// month and Monday = 0, for feeding time through the text encoder.
std::string time_as_text(std::string_view iso);

}  // namespace geotag::temporal
