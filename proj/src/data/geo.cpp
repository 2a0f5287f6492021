// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include "geotag/data/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace geotag::data {

double haversine_m(double lat1, double lon1, double lat2, double lon2) {
  constexpr double rad = std::numbers::pi / 180.0;
  const double dlat = (lat2 - lat1) * rad;
  const double dlon = (lon2 - lon1) * rad;
  const double s1 = std::sin(dlat / 2.0);
  const double s2 = std::sin(dlon / 2.0);
  const double a = s1 * s1 + std::cos(lat1 * rad) * std::cos(lat2 * rad) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(a)));
}

std::vector<Post> label_posts(const std::vector<Post>& posts, const std::vector<Poi>& pois) {
  if (pois.empty()) throw DataError("label_posts: empty POI list");
  std::vector<Post> out;
  for (const auto& post : posts) {
    const Poi* best = nullptr;
    double best_d = 0.0;
    for (const auto& poi : pois) {
      const double d = haversine_m(post.lat, post.lon, poi.lat, poi.lon);
      if (!best || d < best_d || (d == best_d && poi.id < best->id)) {
        best = &poi;
        best_d = d;
      }
    }
    if (best_d < kLabelRadiusM) {
      Post labeled = post;
      labeled.label = best->id;
      out.push_back(std::move(labeled));
    }
  }
  return out;
}

}  // namespace geotag::data
