// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "geotag/data/post.hpp"

namespace geotag::data {

inline constexpr double kEarthRadiusM = 6371000.0;
inline constexpr double kLabelRadiusM = 100.0;

/// Great-circle distance in meters on a sphere of radius kEarthRadiusM.
double haversine_m(double lat1, double lon1, double lat2, double lon2);

/// Labels each post with its nearest POI when that POI is closer than 100 m;
/// other posts are dropped. Equal distances go to the smaller POI id.
std::vector<Post> label_posts(const std::vector<Post>& posts, const std::vector<Poi>& pois);

}  // namespace geotag::data
