// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include "geotag/textenc/transformer.hpp"

#include <cmath>
#include <stdexcept>

namespace geotag::textenc {

using numerics::Graph;
using numerics::Parameter;
using numerics::Tensor;
using numerics::Var;

namespace {
constexpr double kMaskedScore = -1e9;
}  // namespace

Var maybe_dropout(Graph& g, Var x, double rate) {
  return g.training() && rate > 0.0 ? numerics::dropout(x, rate) : x;
}

void StackShape::validate(const std::string& what) const {
  if (layers < 0 || heads <= 0 || width <= 0 || ff <= 0)
    throw std::invalid_argument(what + ": layers, heads, width and ff must be positive");
  if (width % heads != 0)
    throw std::invalid_argument(what + ": width " + std::to_string(width) + " not divisible by " +
                                std::to_string(heads) + " heads");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument(what + ": dropout must be in [0, 1)");
}

Var affine(Graph& g, Var x, Parameter& w, Parameter& b) { return numerics::add(numerics::matmul(x, g.param(w)), g.param(b)); }

TransformerStack::TransformerStack(numerics::ParameterSet& params, const std::string& prefix,
                                   const StackShape& shape, std::mt19937_64& rng, double init_range)
    : shape_(shape) {
  shape_.validate(prefix);
  const auto w = static_cast<std::size_t>(shape.width);
  const auto ff = static_cast<std::size_t>(shape.ff);
  auto weight = [&](const std::string& name, std::size_t r, std::size_t c) {
    return &params.add(name, Tensor::uniform({r, c}, -init_range, init_range, rng));
  };
  auto fill = [&](const std::string& name, std::size_t n, double v) { return &params.add(name, Tensor({n}, v)); };
  for (int l = 0; l < shape.layers; ++l) {
    const std::string p = prefix + ".layer" + std::to_string(l) + ".";
    Block b{};
    b.wq = weight(p + "attn.wq", w, w);
    b.bq = fill(p + "attn.bq", w, 0.0);
    b.wk = weight(p + "attn.wk", w, w);
    b.bk = fill(p + "attn.bk", w, 0.0);
    b.wv = weight(p + "attn.wv", w, w);
    b.bv = fill(p + "attn.bv", w, 0.0);
    b.wo = weight(p + "attn.wo", w, w);
    b.bo = fill(p + "attn.bo", w, 0.0);
    b.ln1_g = fill(p + "ln1.gamma", w, 1.0);
    b.ln1_b = fill(p + "ln1.beta", w, 0.0);
    b.w1 = weight(p + "ff.w1", w, ff);
    b.b1 = fill(p + "ff.b1", ff, 0.0);
    b.w2 = weight(p + "ff.w2", ff, w);
    b.b2 = fill(p + "ff.b2", w, 0.0);
    b.ln2_g = fill(p + "ln2.gamma", w, 1.0);
    b.ln2_b = fill(p + "ln2.beta", w, 0.0);
    blocks_.push_back(b);
  }
}

Var TransformerStack::forward(Graph& g, Var x, const std::vector<std::uint8_t>* key_mask, bool first_row_only,
                              std::vector<Var>* attention) const {
  if (x.value().cols() != static_cast<std::size_t>(shape_.width))
    throw numerics::ShapeError("transformer input width " + std::to_string(x.value().cols()) + " != " +
                               std::to_string(shape_.width));
  if (key_mask && key_mask->size() != x.value().rows())
    throw numerics::ShapeError("attention mask length does not match sequence length");
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    const bool last = l + 1 == blocks_.size();
    x = block_forward(g, blocks_[l], x, key_mask, first_row_only && last, attention);
  }
  if (first_row_only && blocks_.empty()) x = numerics::slice(x, 0, 0, 1);
  return x;
}

Var TransformerStack::block_forward(Graph& g, const Block& b, Var x, const std::vector<std::uint8_t>* key_mask,
                                    bool first_row_only, std::vector<Var>* attention) const {
  using namespace numerics;
  const std::size_t n = x.value().rows();
  const auto heads = static_cast<std::size_t>(shape_.heads);
  const std::size_t dh = static_cast<std::size_t>(shape_.width) / heads;
  const double rate = shape_.dropout;

  Var xq = first_row_only ? slice(x, 0, 0, 1) : x;
  const std::size_t nq = xq.value().rows();
  Var q = affine(g, xq, *b.wq, *b.bq);
  Var kt = transpose(affine(g, x, *b.wk, *b.bk));
  Var v = affine(g, x, *b.wv, *b.bv);

  std::vector<std::uint8_t> fill;
  if (key_mask) {
    fill.resize(nq * n);
    for (std::size_t i = 0; i < nq; ++i)
      for (std::size_t j = 0; j < n; ++j) fill[i * n + j] = (*key_mask)[j] ? 0 : 1;
  }

  std::vector<Var> ctx;
  ctx.reserve(heads);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  for (std::size_t h = 0; h < heads; ++h) {
    Var qh = heads == 1 ? q : slice(q, 1, h * dh, (h + 1) * dh);
    Var kh = heads == 1 ? kt : slice(kt, 0, h * dh, (h + 1) * dh);
    Var vh = heads == 1 ? v : slice(v, 1, h * dh, (h + 1) * dh);
    Var scores = scale(matmul(qh, kh), inv_sqrt);
    if (key_mask) scores = mask_fill(scores, fill, kMaskedScore);
    Var probs = softmax(scores);
    if (attention) attention->push_back(probs);
    ctx.push_back(matmul(maybe_dropout(g, probs, rate), vh));
  }
  Var merged = heads == 1 ? ctx.front() : concat(ctx, 1);
  Var attn = maybe_dropout(g, affine(g, merged, *b.wo, *b.bo), rate);
  Var h1 = layer_norm(add(xq, attn), g.param(*b.ln1_g), g.param(*b.ln1_b));
  Var ff = affine(g, gelu(affine(g, h1, *b.w1, *b.b1)), *b.w2, *b.b2);
  return layer_norm(add(h1, maybe_dropout(g, ff, rate)), g.param(*b.ln2_g), g.param(*b.ln2_b));
}

}  // namespace geotag::textenc
