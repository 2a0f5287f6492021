// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace geotag::data {

inline constexpr std::array<std::size_t, 4> kAccuracyCutoffs = {1, 5, 10, 20};

struct MetricsReport {
  double acc1 = 0.0;
  double acc5 = 0.0;
  double acc10 = 0.0;
  double acc20 = 0.0;
  double mean_distance_m = 0.0;
  double median_distance_m = 0.0;
  std::size_t n_examples = 0;

  bool operator==(const MetricsReport&) const = default;
};

/// Fraction of examples whose label is among the first k entries of its
/// ranking. Rankings are class indices, best first.
double acc_at_k(const std::vector<std::vector<int>>& rankings, const std::vector<int>& labels, std::size_t k);

struct DistanceSummary {
  double mean_m = 0.0;
  double median_m = 0.0;
};

/// Haversine error between predicted and true POIs. The median of an even
/// count is the mean of the two middle values.
DistanceSummary distance_errors(const std::vector<std::string>& predicted, const std::vector<std::string>& truth,
                                const std::unordered_map<std::string, std::pair<double, double>>& coords);

/// acc@{1,5,10,20} plus distance errors of the top-ranked class.
/// `class_coords[c]` is the (lat, lon) of class c.
MetricsReport compute_metrics(const std::vector<std::vector<int>>& rankings, const std::vector<int>& labels,
                              const std::vector<std::pair<double, double>>& class_coords);

/// Indices sorted by descending score; ties keep ascending index order.
std::vector<int> rank_scores(const std::vector<double>& scores);

}  // namespace geotag::data
