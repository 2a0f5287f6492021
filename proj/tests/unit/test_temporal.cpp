// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <ctime>
#include <random>
#include <sstream>

#include "doctest.h"
#include "geotag/temporal/embedding.hpp"
#include "geotag/temporal/time.hpp"

using geotag::numerics::Graph;
using geotag::numerics::ParameterSet;
using geotag::numerics::Tensor;

using namespace geotag::temporal;

TEST_CASE("decompose_timestamp examples") {
  CHECK(decompose_timestamp("2020-01-01T13:45:00Z") == TimeElements{45, 13, 2, 0});
  CHECK(decompose_timestamp("1970-01-01T00:00:00Z") == TimeElements{0, 0, 3, 0});
  CHECK(decompose_timestamp("2024-02-29T23:59:59Z") == TimeElements{59, 23, 3, 1});
  CHECK_THROWS_AS(decompose_timestamp("not a date"), TimeParseError);
}

TEST_CASE("parse_iso8601 accepted forms") {
  CHECK(parse_iso8601("2020-01-01T13:45:00Z") == CivilTime{2020, 1, 1, 13, 45, 0});
  CHECK(parse_iso8601("2020-01-01 13:45") == CivilTime{2020, 1, 1, 13, 45, 0});
  CHECK(parse_iso8601("2020-01-01T13:45:07.250Z") == CivilTime{2020, 1, 1, 13, 45, 7});
  CHECK(parse_iso8601("2020-01-01T10:00:00+10:00") == CivilTime{2020, 1, 1, 0, 0, 0});
  CHECK(parse_iso8601("2020-01-01T01:30:00+1000") == CivilTime{2019, 12, 31, 15, 30, 0});
  CHECK(parse_iso8601("2019-12-31T22:00:00-05:00") == CivilTime{2020, 1, 1, 3, 0, 0});
}

TEST_CASE("parse_iso8601 rejects malformed input") {
  for (const char* bad : {"", "2020-13-01T00:00:00Z", "2019-02-29T00:00:00Z", "2020-01-01", "2020-01-01T24:00:00Z",
                          "2020-01-01T00:60Z", "2020-01-01T00:00:00Zjunk", "2020/01/01T00:00:00Z",
                          "2020-01-01T00:00:00+25:00"})
    CHECK_THROWS_AS(parse_iso8601(bad), TimeParseError);
}

TEST_CASE("time_as_text examples") {
  CHECK(time_as_text("2020-01-01T13:45:00Z") == "y2020 m1 d1 h13 min45 w2");
  CHECK(time_as_text("2020-01-01T13:45:00Z") == time_as_text("2020-01-01T13:45:00Z"));

  const std::string s = time_as_text("2017-08-19T06:07:00Z");
  std::istringstream in(s);
  std::string y, m, d, h, mi, w;
  in >> y >> m >> d >> h >> mi >> w;
  CivilTime back{std::stoi(y.substr(1)), std::stoi(m.substr(1)), std::stoi(d.substr(1)), std::stoi(h.substr(1)),
                 std::stoi(mi.substr(3)), 0};
  CHECK(back == parse_iso8601("2017-08-19T06:07:00Z"));
  CHECK(std::stoi(w.substr(1)) == weekday_of(back));
}

TEST_CASE("calendar agrees with libc on random timestamps") {
  std::mt19937_64 rng(2024);
  const std::int64_t lo = 0;
  const std::int64_t hi = unix_from_civil({2100, 12, 31, 23, 59, 59});
  std::uniform_int_distribution<std::int64_t> dist(lo, hi);
  for (int i = 0; i < 1000; ++i) {
    const std::int64_t ts = dist(rng);
    const std::time_t tt = static_cast<std::time_t>(ts);
    std::tm tm{};
    REQUIRE(gmtime_r(&tt, &tm) != nullptr);
    const std::string iso = to_iso8601(civil_from_unix(ts));
    const CivilTime c = parse_iso8601(iso);
    CHECK(c.year == tm.tm_year + 1900);
    CHECK(c.month == tm.tm_mon + 1);
    CHECK(c.day == tm.tm_mday);
    CHECK(c.hour == tm.tm_hour);
    CHECK(c.minute == tm.tm_min);
    CHECK(c.second == tm.tm_sec);
    const TimeElements el = decompose_timestamp(iso);
    CHECK(el.weekday == (tm.tm_wday + 6) % 7);
    CHECK(el.month == tm.tm_mon);
    CHECK(unix_from_civil(c) == static_cast<std::int64_t>(timegm(&tm)));
  }
}

TEST_CASE("unihier tables") {
  ParameterSet ps;
  std::mt19937_64 rng(13);
  UniHierEmbedding uni(ps, 6, rng);
  CHECK(ps.size() == 3);
  for (const auto& p : ps) {
    CHECK(p.value.shape() == geotag::numerics::Shape{60, 6});
    CHECK(*std::min_element(p.value.storage().begin(), p.value.storage().end()) >= -1.0);
    CHECK(*std::max_element(p.value.storage().begin(), p.value.storage().end()) <= 1.0);
  }
  ParameterSet with_minute;
  UniHierEmbedding uni_m(with_minute, 6, rng, true);
  CHECK(with_minute.size() == 4);
  CHECK(uni_m.uses_minute());
}

TEST_CASE("unihier_embed examples") {
  ParameterSet ps;
  std::mt19937_64 rng(14);
  UniHierEmbedding uni(ps, 6, rng);
  for (int trial = 0; trial < 20; ++trial) {
    TimeElements el{static_cast<int>(rng() % 60), static_cast<int>(rng() % 24), static_cast<int>(rng() % 7),
                    static_cast<int>(rng() % 12)};
    Graph g;
    const Tensor y = uni.embed(g, el).value();
    for (std::size_t c = 0; c < 6; ++c)
      CHECK(y[c] == doctest::Approx(ps.get("time.hour").value.at(static_cast<std::size_t>(el.hour), c) +
                                    ps.get("time.weekday").value.at(static_cast<std::size_t>(el.weekday), c) +
                                    ps.get("time.month").value.at(static_cast<std::size_t>(el.month), c))
                        .epsilon(1e-15));
    TimeElements other = el;
    other.minute = (el.minute + 1) % 60;
    CHECK(uni.embed(g, other).value().storage() == y.storage());
  }
  Graph g;
  CHECK_THROWS_AS(uni.embed(g, TimeElements{0, 60, 0, 0}), std::out_of_range);
  for (auto& p : ps) p.value.fill(0.0);
  for (double v : uni.embed(g, TimeElements{1, 2, 3, 4}).value().storage()) CHECK(v == 0.0);
}

TEST_CASE("unihier_embed is linear in the tables") {
  ParameterSet ps;
  std::mt19937_64 rng(15);
  UniHierEmbedding uni(ps, 5, rng, true);
  TimeElements el{31, 7, 6, 2};
  Graph g;
  const Tensor y = uni.embed(g, el).value();
  for (auto& p : ps)
    for (double& v : p.value.storage()) v *= -2.5;
  const Tensor z = uni.embed(g, el).value();
  for (std::size_t c = 0; c < 5; ++c) CHECK(z[c] == doctest::Approx(-2.5 * y[c]).epsilon(1e-14));
}

TEST_CASE("unihier gradients touch only indexed rows") {
  ParameterSet ps;
  std::mt19937_64 rng(16);
  UniHierEmbedding uni(ps, 4, rng);
  TimeElements a{0, 5, 1, 11}, b{0, 20, 1, 3};
  Graph g;
  g.backward(geotag::numerics::mean(geotag::numerics::add(uni.embed(g, a), uni.embed(g, b))));
  auto touched = [](const Tensor& grad) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < grad.rows(); ++r)
      if (std::any_of(grad.row(r).begin(), grad.row(r).end(), [](double v) { return v != 0.0; })) rows.push_back(r);
    return rows;
  };
  CHECK(touched(ps.get("time.hour").grad) == std::vector<std::size_t>{5, 20});
  CHECK(touched(ps.get("time.weekday").grad) == std::vector<std::size_t>{1});
  CHECK(touched(ps.get("time.month").grad) == std::vector<std::size_t>{3, 11});
}

TEST_CASE("time one-hot examples") {
  TimeElements el{12, 22, 6, 11};
  auto v = one_hot_vector(el);
  REQUIRE(v.size() == 43);
  CHECK(std::count(v.begin(), v.end(), 1.0) == 3);
  CHECK(std::count(v.begin(), v.end(), 0.0) == 40);
  CHECK(v[22] == 1.0);
  CHECK(v[24 + 6] == 1.0);
  CHECK(v[31 + 11] == 1.0);
  CHECK_THROWS_AS(one_hot_vector(TimeElements{0, 24, 0, 0}), std::out_of_range);

  ParameterSet ps;
  std::mt19937_64 rng(17);
  OneHotTime oh(ps, 5, rng);
  const Tensor& proj = ps.get("time.onehot_proj").value;
  Graph g;
  const Tensor y = oh.embed(g, el).value();
  for (std::size_t c = 0; c < 5; ++c)
    CHECK(y[c] == doctest::Approx(proj.at(22, c) + proj.at(30, c) + proj.at(42, c)).epsilon(1e-15));
  ps.get("time.onehot_proj").value.fill(0.0);
  for (double v2 : oh.embed(g, el).value().storage()) CHECK(v2 == 0.0);
}
