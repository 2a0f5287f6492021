// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include "geotag/app/model.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "geotag/data/metrics.hpp"

namespace geotag::app {

using numerics::Graph;

GeoModel GeoModel::create(const RunConfig& cfg, std::vector<data::Poi> pois, const std::vector<data::Post>& train) {
  cfg.validate();
  fusion::ModelSpec spec;
  spec.schema = cfg.schema;
  spec.encoder = cfg.encoder;
  spec.fusion = cfg.fusion;
  spec.time_minute = cfg.time_minute;
  spec.vocab = std::make_shared<const textenc::Vocab>(
      fusion::build_feature_vocab(train, cfg.schema, static_cast<std::size_t>(cfg.encoder.vocab_size)));
  spec.categories = fusion::build_category_vocabs(train, cfg.schema);
  spec.encoder.vocab_size = spec.vocab->size();
  return GeoModel(cfg, std::move(pois), std::move(spec));
}

GeoModel::GeoModel(const RunConfig& cfg, std::vector<data::Poi> pois, fusion::ModelSpec spec)
    : cfg_(cfg), pois_(std::move(pois)), spec_(std::move(spec)) {
  cfg_.validate();
  spec_.validate();
  if (pois_.empty()) throw std::invalid_argument("model needs at least one POI");
  std::sort(pois_.begin(), pois_.end(), [](const data::Poi& a, const data::Poi& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < pois_.size(); ++i)
    if (!class_index_.emplace(pois_[i].id, static_cast<int>(i)).second)
      throw std::invalid_argument("duplicate POI id " + pois_[i].id);

  if (cfg_.variant != Variant::trans) {
    auto levels = cfg_.variant == Variant::mtl
                      ? std::vector<hierarchy::Level>{hierarchy::Level::theme, hierarchy::Level::subtheme,
                                                      hierarchy::Level::poi}
                      : cfg_.hier_levels;
    tree_.emplace(pois_, levels);
    leaf_of_class_.resize(pois_.size());
    class_of_node_.assign(tree_->size(), -1);
    for (std::size_t c = 0; c < pois_.size(); ++c) {
      leaf_of_class_[c] = tree_->leaf(pois_[c].id);
      class_of_node_[static_cast<std::size_t>(leaf_of_class_[c])] = static_cast<int>(c);
    }
  }

  std::mt19937_64 rng(cfg_.seed);
  switch (cfg_.variant) {
    case Variant::trans:
      params_ = std::make_unique<numerics::ParameterSet>();
      trans_ = std::make_unique<fusion::TransTagger>(*params_, "", spec_, pois_.size(), rng);
      break;
    case Variant::hier:
      lcpn_ = std::make_unique<hierarchy::LcpnModel>(*tree_, spec_, cfg_.seed, cfg_.block_threshold);
      break;
    case Variant::mtl:
      params_ = std::make_unique<numerics::ParameterSet>();
      mtl_ = std::make_unique<hierarchy::MtlTagger>(*params_, *tree_, spec_, rng);
      break;
  }
}

int GeoModel::class_of(const std::string& poi_id) const {
  auto it = class_index_.find(poi_id);
  return it == class_index_.end() ? -1 : it->second;
}

ScoredPrediction GeoModel::predict(const fusion::PreparedPost& post) const {
  ScoredPrediction out;
  out.scores.assign(pois_.size(), 0.0);
  if (trans_) {
    Graph g;
    const auto& p = fusion::classify(trans_->logits(g, post)).value().storage();
    std::copy(p.begin(), p.end(), out.scores.begin());
    out.ranking = data::rank_scores(out.scores);
  } else if (mtl_) {
    Graph g;
    const auto& p = fusion::classify(mtl_->forward(g, post).poi).value().storage();
    const auto& leaves = tree_->level_nodes(hierarchy::Level::poi);
    for (std::size_t k = 0; k < leaves.size(); ++k)
      out.scores[static_cast<std::size_t>(class_of_node_[static_cast<std::size_t>(leaves[k])])] = p[k];
    out.ranking = data::rank_scores(out.scores);
  } else {
    const auto pred = lcpn_->predict(post);
    out.ranking.reserve(pred.ranking.size());
    for (std::size_t i = 0; i < pred.ranking.size(); ++i) {
      const int c = class_of_node_[static_cast<std::size_t>(pred.ranking[i])];
      out.ranking.push_back(c);
      out.scores[static_cast<std::size_t>(c)] = pred.scores[i];
    }
  }
  return out;
}

std::vector<numerics::ParameterSet*> GeoModel::parameter_sets() {
  std::vector<numerics::ParameterSet*> out;
  if (params_) out.push_back(params_.get());
  if (lcpn_)
    for (auto& lc : lcpn_->locals()) out.push_back(lc.params.get());
  return out;
}

std::vector<const numerics::ParameterSet*> GeoModel::parameter_sets() const {
  std::vector<const numerics::ParameterSet*> out;
  if (params_) out.push_back(params_.get());
  if (lcpn_)
    for (const auto& lc : lcpn_->locals()) out.push_back(lc.params.get());
  return out;
}

}  // namespace geotag::app
