// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>
#include <string>

#include "geotag/numerics/graph.hpp"
#include "geotag/textenc/transformer.hpp"
#include "geotag/textenc/vocab.hpp"

namespace geotag::textenc {

struct EncoderConfig {
  int layers = 2;
  int heads = 4;
  int hidden = 128;
  int ff = 256;
  double dropout = 0.1;
  std::size_t max_len = 100;
  std::size_t vocab_size = 5000;

  void validate() const;
  StackShape stack_shape() const { return {layers, heads, hidden, ff, dropout}; }
};

/// Final hidden states E (N x H) and the [CLS] row C (1 x H).
struct EncodedText {
  numerics::Var hidden;
  numerics::Var cls;
};

/// Token + position + segment embeddings followed by a bidirectional
/// transformer stack. Parameters live in the caller's ParameterSet under
/// `prefix`.
class TextEncoder {
 public:
  TextEncoder(numerics::ParameterSet& params, const EncoderConfig& cfg, std::size_t vocab_size,
              std::mt19937_64& rng, const std::string& prefix = "text");

  /// Row i = token[ids[i]] + position[i] + segment[0].
  numerics::Var embed(numerics::Graph& g, const TokenSeq& seq) const;

  EncodedText encode(numerics::Graph& g, const TokenSeq& seq,
                     std::vector<numerics::Var>* attention = nullptr) const;

  /// Same C as encode(), skipping the work that only feeds non-[CLS] rows of
  /// the last layer.
  numerics::Var encode_cls(numerics::Graph& g, const TokenSeq& seq) const;

  const EncoderConfig& config() const { return cfg_; }

 private:
  numerics::Var embed_normed(numerics::Graph& g, const TokenSeq& seq) const;
  void check(const TokenSeq& seq) const;

  EncoderConfig cfg_;
  numerics::Parameter* token_;
  numerics::Parameter* position_;
  numerics::Parameter* segment_;
  numerics::Parameter* ln_gamma_;
  numerics::Parameter* ln_beta_;
  TransformerStack stack_;
};

}  // namespace geotag::textenc
