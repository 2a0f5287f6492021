// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>

#include "geotag/fusion/tagger.hpp"
#include "geotag/hierarchy/tree.hpp"

namespace geotag::hierarchy {

/// Logits of the three heads.
struct MtlOutput {
  numerics::Var theme;
  numerics::Var subtheme;
  numerics::Var poi;
};

struct MtlLabels {
  int theme = 0;
  int subtheme = 0;
  int poi = 0;
};

struct MtlWeights {
  double theme = 0.1;
  double subtheme = 0.1;
  double poi = 1.0;
  /// Weight of the correlation-matrix consistency terms.
  double lambda_c = 0.1;
};

/// One shared fusion backbone with theme, subtheme and POI heads. Class
/// indices follow the tree's level order.
class MtlTagger {
 public:
  /// `tree` must have all three levels.
  MtlTagger(numerics::ParameterSet& params, const PoiTree& tree, const fusion::ModelSpec& spec, std::mt19937_64& rng);

  fusion::PreparedPost prepare(const data::Post& post) const { return backbone_.prepare(post); }
  MtlOutput forward(numerics::Graph& g, const fusion::PreparedPost& post) const;
  /// Labels of a leaf node.
  MtlLabels labels_of(int leaf) const;

  const numerics::Tensor& theme_to_subtheme() const { return m_ts_; }
  const numerics::Tensor& subtheme_to_poi() const { return m_sp_; }

 private:
  PoiTree tree_;
  fusion::FusionBackbone backbone_;
  fusion::ClassifierHead theme_head_;
  fusion::ClassifierHead subtheme_head_;
  fusion::ClassifierHead poi_head_;
  numerics::Tensor m_ts_;
  numerics::Tensor m_sp_;
};

/// w_t CE(q_theme, y_t) + w_s CE(q_sub, y_s) + w_p CE(p_poi, y_p)
///   + lambda_c [X(q_theme M_ts, q_sub) + X(q_sub M_sp, p_poi)]
/// with X(a, b) = -sum_j a_j log b_j and q, p the softmax of the head logits.
numerics::Var mtl_loss(const MtlOutput& out, const MtlLabels& labels, const numerics::Tensor& m_ts,
                       const numerics::Tensor& m_sp, const MtlWeights& weights = {});

}  // namespace geotag::hierarchy
