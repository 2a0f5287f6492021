// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "geotag/numerics/graph.hpp"

namespace geotag::textenc {

struct StackShape {
  int layers = 2;
  int heads = 4;
  int width = 128;
  int ff = 256;
  double dropout = 0.1;

  /// Throws std::invalid_argument unless all sizes are positive (layers may be
  /// zero) and width is divisible by heads.
  void validate(const std::string& what) const;
};

/// Stack of post-norm encoder blocks: multi-head self-attention and a GELU
/// feed-forward, each wrapped in dropout, a residual and layer norm.
class TransformerStack {
 public:
  TransformerStack(numerics::ParameterSet& params, const std::string& prefix, const StackShape& shape,
                   std::mt19937_64& rng, double init_range = 0.02);

  /// `x` is rows x width. `key_mask` (optional, one entry per row) marks keys
  /// that may be attended to. With `first_row_only` the last block evaluates
  /// only row 0 and the result has a single row.
  /// When `attention` is non-null, every head's attention probabilities are
  /// appended to it, layer by layer.
  numerics::Var forward(numerics::Graph& g, numerics::Var x, const std::vector<std::uint8_t>* key_mask,
                        bool first_row_only = false, std::vector<numerics::Var>* attention = nullptr) const;

  const StackShape& shape() const { return shape_; }

 private:
  struct Block {
    numerics::Parameter *wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
    numerics::Parameter *ln1_g, *ln1_b;
    numerics::Parameter *w1, *b1, *w2, *b2;
    numerics::Parameter *ln2_g, *ln2_b;
  };

  numerics::Var block_forward(numerics::Graph& g, const Block& b, numerics::Var x,
                              const std::vector<std::uint8_t>* key_mask, bool first_row_only,
                              std::vector<numerics::Var>* attention) const;

  StackShape shape_;
  std::vector<Block> blocks_;
};

/// Linear layer helper: x * w + b.
numerics::Var affine(numerics::Graph& g, numerics::Var x, numerics::Parameter& w, numerics::Parameter& b);

/// Dropout in training graphs; identity (no node) otherwise.
numerics::Var maybe_dropout(numerics::Graph& g, numerics::Var x, double rate);

}  // namespace geotag::textenc
