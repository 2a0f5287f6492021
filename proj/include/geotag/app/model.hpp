// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "geotag/app/config.hpp"
#include "geotag/data/post.hpp"
#include "geotag/hierarchy/lcpn.hpp"
#include "geotag/hierarchy/mtl.hpp"

namespace geotag::app {

struct ScoredPrediction {
  /// One score per POI class.
  std::vector<double> scores;
  /// Class indices, best first.
  std::vector<int> ranking;
};

/// A trained or freshly initialized tagger of any variant over a fixed POI
/// class list (sorted by POI id).
class GeoModel {
 public:
  /// Builds vocabularies from `train` and initializes parameters from cfg.seed.
  static GeoModel create(const RunConfig& cfg, std::vector<data::Poi> pois, const std::vector<data::Post>& train);
  /// Initializes parameters for an existing spec (used when loading).
  GeoModel(const RunConfig& cfg, std::vector<data::Poi> pois, fusion::ModelSpec spec);

  GeoModel(GeoModel&&) noexcept = default;
  GeoModel& operator=(GeoModel&&) noexcept = default;

  const RunConfig& config() const { return cfg_; }
  const fusion::ModelSpec& spec() const { return spec_; }
  const std::vector<data::Poi>& pois() const { return pois_; }
  std::size_t classes() const { return pois_.size(); }
  /// Class index of a POI id, or -1.
  int class_of(const std::string& poi_id) const;
  const hierarchy::PoiTree* tree() const { return tree_ ? &*tree_ : nullptr; }

  fusion::PreparedPost prepare(const data::Post& post) const { return fusion::prepare_post(spec_, post); }
  ScoredPrediction predict(const fusion::PreparedPost& post) const;

  /// Every parameter set, in checkpoint order.
  std::vector<numerics::ParameterSet*> parameter_sets();
  std::vector<const numerics::ParameterSet*> parameter_sets() const;

  fusion::TransTagger* trans() { return trans_.get(); }
  hierarchy::LcpnModel* lcpn() { return lcpn_.get(); }
  const hierarchy::LcpnModel* lcpn() const { return lcpn_.get(); }
  hierarchy::MtlTagger* mtl() { return mtl_.get(); }
  /// Tree leaf node of POI class c.
  int leaf_of_class(int c) const { return leaf_of_class_.at(static_cast<std::size_t>(c)); }

 private:
  RunConfig cfg_;
  std::vector<data::Poi> pois_;
  std::unordered_map<std::string, int> class_index_;
  fusion::ModelSpec spec_;
  std::optional<hierarchy::PoiTree> tree_;
  std::vector<int> leaf_of_class_;
  std::vector<int> class_of_node_;
  std::unique_ptr<numerics::ParameterSet> params_;
  std::unique_ptr<fusion::TransTagger> trans_;
  std::unique_ptr<hierarchy::LcpnModel> lcpn_;
  std::unique_ptr<hierarchy::MtlTagger> mtl_;
};

}  // namespace geotag::app
