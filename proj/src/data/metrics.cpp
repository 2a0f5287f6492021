// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include "geotag/data/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "geotag/data/geo.hpp"

namespace geotag::data {

double acc_at_k(const std::vector<std::vector<int>>& rankings, const std::vector<int>& labels, std::size_t k) {
  if (rankings.empty()) throw std::invalid_argument("acc_at_k: no examples");
  if (rankings.size() != labels.size()) throw std::invalid_argument("acc_at_k: rankings/labels length mismatch");
  if (k < 1) throw std::invalid_argument("acc_at_k: k must be at least 1");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    const auto& r = rankings[i];
    const auto end = r.begin() + static_cast<std::ptrdiff_t>(std::min(k, r.size()));
    if (std::find(r.begin(), end, labels[i]) != end) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

namespace {

DistanceSummary summarize(std::vector<double> d) {
  if (d.empty()) throw std::invalid_argument("distance_errors: no examples");
  DistanceSummary s;
  s.mean_m = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
  std::sort(d.begin(), d.end());
  const std::size_t n = d.size();
  s.median_m = n % 2 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
  return s;
}

}  // namespace

DistanceSummary distance_errors(const std::vector<std::string>& predicted, const std::vector<std::string>& truth,
                                const std::unordered_map<std::string, std::pair<double, double>>& coords) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("distance_errors: length mismatch");
  auto lookup = [&](const std::string& id) {
    auto it = coords.find(id);
    if (it == coords.end()) throw std::out_of_range("distance_errors: unknown POI id " + id);
    return it->second;
  };
  std::vector<double> d;
  d.reserve(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const auto [la1, lo1] = lookup(predicted[i]);
    const auto [la2, lo2] = lookup(truth[i]);
    d.push_back(haversine_m(la1, lo1, la2, lo2));
  }
  return summarize(std::move(d));
}

MetricsReport compute_metrics(const std::vector<std::vector<int>>& rankings, const std::vector<int>& labels,
                              const std::vector<std::pair<double, double>>& class_coords) {
  MetricsReport r;
  r.n_examples = rankings.size();
  r.acc1 = acc_at_k(rankings, labels, 1);
  r.acc5 = acc_at_k(rankings, labels, 5);
  r.acc10 = acc_at_k(rankings, labels, 10);
  r.acc20 = acc_at_k(rankings, labels, 20);
  std::vector<double> d;
  d.reserve(rankings.size());
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    if (rankings[i].empty()) throw std::invalid_argument("compute_metrics: empty ranking");
    const auto& p = class_coords.at(static_cast<std::size_t>(rankings[i].front()));
    const auto& t = class_coords.at(static_cast<std::size_t>(labels[i]));
    d.push_back(haversine_m(p.first, p.second, t.first, t.second));
  }
  const auto s = summarize(std::move(d));
  r.mean_distance_m = s.mean_m;
  r.median_distance_m = s.median_m;
  return r;
}

std::vector<int> rank_scores(const std::vector<double>& scores) {
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  return idx;
}

}  // namespace geotag::data
