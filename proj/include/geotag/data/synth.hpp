// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "geotag/data/post.hpp"
#include "json.hpp"

namespace geotag::data {

/// Synthetic corpus with planted signal in every input category: a POI
/// keyword in the post text, a POI-preferred posting source, a POI-preferred
/// hour of day, and a theme-preferred user location.
struct SynthConfig {
  int n_pois = 30;
  int n_themes = 4;
  int n_subthemes = 8;
  int posts_per_poi = 100;
  double keyword_prob = 0.6;
  double source_prob = 0.7;
  double hour_prob = 0.7;
  double location_prob = 0.5;
  int vocab_size = 200;
  double lat_min = -37.830;
  double lat_max = -37.800;
  double lon_min = 144.940;
  double lon_max = 144.990;
  double scatter_radius_m = 50.0;
  double min_spacing_m = 250.0;
  std::uint64_t seed = 7;

  void validate() const;
};

void to_json(nlohmann::json& j, const SynthConfig& c);
void from_json(const nlohmann::json& j, SynthConfig& c);

struct SynthData {
  std::vector<Poi> pois;
  /// Unlabeled posts, shuffled.
  std::vector<Post> posts;
  /// Planted POI id per post, same order as `posts`.
  std::vector<std::string> planted;
  /// Signature keyword per POI, same order as `pois`.
  std::vector<std::string> keywords;
};

/// Deterministic for a given config (including seed).
SynthData gen_synthetic(const SynthConfig& cfg);

struct SplitSets {
  std::vector<Post> train;
  std::vector<Post> val;
  std::vector<Post> test;
};

/// Seeded, stratified-by-label partition with exact largest-remainder sizes.
/// Throws if a split with a positive ratio would be empty while the dataset
/// has at least as many posts as there are splits.
SplitSets split(const std::vector<Post>& posts, const std::array<double, 3>& ratios, std::uint64_t seed);

}  // namespace geotag::data
