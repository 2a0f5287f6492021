// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include "geotag/hierarchy/mtl.hpp"

#include <stdexcept>

namespace geotag::hierarchy {

using numerics::Var;

namespace {

const PoiTree& require_three_levels(const PoiTree& tree) {
  if (tree.levels() != std::vector<Level>{Level::theme, Level::subtheme, Level::poi})
    throw std::invalid_argument("multi-task tagger needs a theme/subtheme/poi tree");
  return tree;
}

void check_label(int label, std::size_t classes, const char* level) {
  if (label < 0 || static_cast<std::size_t>(label) >= classes)
    throw std::out_of_range(std::string("mtl_loss: ") + level + " label " + std::to_string(label) + " outside [0, " +
                            std::to_string(classes) + ")");
}

}  // namespace

MtlTagger::MtlTagger(numerics::ParameterSet& params, const PoiTree& tree, const fusion::ModelSpec& spec,
                     std::mt19937_64& rng)
    : tree_(require_three_levels(tree)),
      backbone_(params, "", spec, rng),
      theme_head_(params, "head.theme", backbone_.flat_width(), tree.level_nodes(Level::theme).size(), rng),
      subtheme_head_(params, "head.subtheme", backbone_.flat_width(), tree.level_nodes(Level::subtheme).size(), rng),
      poi_head_(params, "head.poi", backbone_.flat_width(), tree.level_nodes(Level::poi).size(), rng),
      m_ts_(correlation_matrix(tree, Level::theme, Level::subtheme)),
      m_sp_(correlation_matrix(tree, Level::subtheme, Level::poi)) {}

MtlOutput MtlTagger::forward(numerics::Graph& g, const fusion::PreparedPost& post) const {
  Var shared = backbone_.forward(g, post);
  return {theme_head_.logits(g, shared), subtheme_head_.logits(g, shared), poi_head_.logits(g, shared)};
}

MtlLabels MtlTagger::labels_of(int leaf) const {
  return {tree_.class_index(tree_.ancestor(leaf, Level::theme)),
          tree_.class_index(tree_.ancestor(leaf, Level::subtheme)), tree_.class_index(leaf)};
}

Var mtl_loss(const MtlOutput& out, const MtlLabels& labels, const numerics::Tensor& m_ts,
             const numerics::Tensor& m_sp, const MtlWeights& w) {
  using namespace numerics;
  const std::size_t nt = out.theme.value().cols(), ns = out.subtheme.value().cols(), np = out.poi.value().cols();
  check_label(labels.theme, nt, "theme");
  check_label(labels.subtheme, ns, "subtheme");
  check_label(labels.poi, np, "poi");
  if (m_ts.rows() != nt || m_ts.cols() != ns || m_sp.rows() != ns || m_sp.cols() != np)
    throw ShapeError("mtl_loss: correlation matrices " + shape_str(m_ts.shape()) + " and " + shape_str(m_sp.shape()) +
                     " do not match heads of " + std::to_string(nt) + "/" + std::to_string(ns) + "/" +
                     std::to_string(np) + " classes");
  Graph& g = *out.theme.graph();
  Var loss = add(add(scale(cross_entropy(out.theme, {labels.theme}), w.theme),
                     scale(cross_entropy(out.subtheme, {labels.subtheme}), w.subtheme)),
                 scale(cross_entropy(out.poi, {labels.poi}), w.poi));
  if (w.lambda_c == 0.0) return loss;
  Var q_theme = softmax(out.theme);
  Var q_sub = softmax(out.subtheme);
  Var x_ts = cross_entropy(out.subtheme, matmul(q_theme, g.constant(m_ts)));
  Var x_sp = cross_entropy(out.poi, matmul(q_sub, g.constant(m_sp)));
  return add(loss, scale(add(x_ts, x_sp), w.lambda_c));
}

}  // namespace geotag::hierarchy
