// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include "geotag/textenc/encoder.hpp"

#include <stdexcept>

namespace geotag::textenc {

using numerics::Graph;
using numerics::Tensor;
using numerics::Var;

void EncoderConfig::validate() const {
  stack_shape().validate("text encoder");
  if (max_len < 1) throw std::invalid_argument("text encoder: max_len must be positive");
  if (vocab_size < 3) throw std::invalid_argument("text encoder: vocab_size must be at least 3");
}

namespace {
constexpr double kInitRange = 0.02;
}

TextEncoder::TextEncoder(numerics::ParameterSet& params, const EncoderConfig& cfg, std::size_t vocab_size,
                         std::mt19937_64& rng, const std::string& prefix)
    : cfg_((cfg.validate(), cfg)),
      token_(&params.add(prefix + ".token_emb",
                         Tensor::uniform({vocab_size, static_cast<std::size_t>(cfg.hidden)}, -kInitRange,
                                         kInitRange, rng))),
      position_(&params.add(prefix + ".position_emb",
                            Tensor::uniform({cfg.max_len, static_cast<std::size_t>(cfg.hidden)}, -kInitRange,
                                            kInitRange, rng))),
      segment_(&params.add(prefix + ".segment_emb", Tensor({1, static_cast<std::size_t>(cfg.hidden)}))),
      ln_gamma_(&params.add(prefix + ".emb_ln.gamma", Tensor({static_cast<std::size_t>(cfg.hidden)}, 1.0))),
      ln_beta_(&params.add(prefix + ".emb_ln.beta", Tensor({static_cast<std::size_t>(cfg.hidden)}))),
      stack_(params, prefix, cfg.stack_shape(), rng, kInitRange) {}

void TextEncoder::check(const TokenSeq& seq) const {
  if (seq.ids.empty()) throw std::invalid_argument("text encoder: empty token sequence");
  if (seq.mask.size() != seq.ids.size()) throw std::invalid_argument("text encoder: mask length mismatch");
  if (seq.ids.size() > position_->value.rows())
    throw std::out_of_range("text encoder: sequence of " + std::to_string(seq.ids.size()) +
                            " tokens exceeds position table of " + std::to_string(position_->value.rows()));
  for (int id : seq.ids)
    if (id < 0 || static_cast<std::size_t>(id) >= token_->value.rows())
      throw std::out_of_range("text encoder: token id " + std::to_string(id) + " outside vocabulary of " +
                              std::to_string(token_->value.rows()));
}

Var TextEncoder::embed(Graph& g, const TokenSeq& seq) const {
  check(seq);
  std::vector<int> positions(seq.ids.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int>(i);
  Var tok = numerics::embed_lookup(g.param(*token_), seq.ids);
  Var pos = numerics::embed_lookup(g.param(*position_), positions);
  return numerics::add(numerics::add(tok, pos), numerics::reshape(g.param(*segment_), {segment_->value.cols()}));
}

Var TextEncoder::embed_normed(Graph& g, const TokenSeq& seq) const {
  Var x = numerics::layer_norm(embed(g, seq), g.param(*ln_gamma_), g.param(*ln_beta_));
  return maybe_dropout(g, x, cfg_.dropout);
}

EncodedText TextEncoder::encode(Graph& g, const TokenSeq& seq, std::vector<Var>* attention) const {
  Var hidden = stack_.forward(g, embed_normed(g, seq), &seq.mask, false, attention);
  return {hidden, numerics::slice(hidden, 0, 0, 1)};
}

Var TextEncoder::encode_cls(Graph& g, const TokenSeq& seq) const {
  return stack_.forward(g, embed_normed(g, seq), &seq.mask, true);
}

}  // namespace geotag::textenc
