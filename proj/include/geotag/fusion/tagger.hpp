// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "geotag/data/post.hpp"
#include "geotag/fusion/schema.hpp"
#include "geotag/numerics/graph.hpp"
#include "geotag/temporal/embedding.hpp"
#include "geotag/textenc/encoder.hpp"
#include "json.hpp"

namespace geotag::fusion {

struct FusionConfig {
  int layers = 3;
  int heads = 4;
  int width = 128;
  int ff = 256;
  double dropout = 0.1;
  PositionMode position = PositionMode::concat;
  bool use_encoder = true;

  void validate() const;
  bool operator==(const FusionConfig&) const = default;
};

void to_json(nlohmann::json& j, const FusionConfig& c);
void from_json(const nlohmann::json& j, FusionConfig& c);

/// Everything a feature extractor needs besides its parameters.
struct ModelSpec {
  FeatureSchema schema;
  textenc::EncoderConfig encoder;
  FusionConfig fusion;
  bool time_minute = false;
  std::shared_ptr<const textenc::Vocab> vocab;
  /// One per categorical field.
  std::vector<CategoryVocab> categories;

  void validate() const;
};

/// Model inputs of one post, resolved once: token sequences for every field
/// routed through the text encoder (in row order), category ids and time
/// elements for the others.
struct PreparedPost {
  std::vector<textenc::TokenSeq> sequences;
  std::vector<int> categories;
  std::vector<temporal::TimeElements> times;
};

/// Tokenizes and decomposes every schema field of `post`. Throws
/// data::DataError naming a missing field.
PreparedPost prepare_post(const ModelSpec& spec, const data::Post& post);

/// Builds the (m+n+t) x H feature matrix of a post.
class FeatureExtractor {
 public:
  FeatureExtractor(numerics::ParameterSet& params, const std::string& prefix, const ModelSpec& spec,
                   std::mt19937_64& rng);

  PreparedPost prepare(const data::Post& post) const { return prepare_post(spec_, post); }
  numerics::Var assemble(numerics::Graph& g, const PreparedPost& post) const;

  /// 1 x H representation of one categorical value of field `field`.
  numerics::Var encode_categorical(numerics::Graph& g, std::size_t field, const std::string& value) const;

  const ModelSpec& spec() const { return spec_; }
  const textenc::TextEncoder& text_encoder() const { return text_; }

 private:
  ModelSpec spec_;
  textenc::TextEncoder text_;
  std::vector<numerics::Parameter*> ct_proj_;
  std::vector<temporal::UniHierEmbedding> unihier_;
  std::vector<temporal::OneHotTime> onehot_time_;
};

/// Positional encodings, input projection to d_f and the fusion encoder
/// blocks.
class FusionStack {
 public:
  FusionStack(numerics::ParameterSet& params, const std::string& prefix, const FusionConfig& cfg, std::size_t rows,
              std::size_t hidden, std::mt19937_64& rng);

  /// features: rows x H. Returns rows x d_f.
  numerics::Var forward(numerics::Graph& g, numerics::Var features) const;
  /// Projection and (optionally) encoder blocks on already-positioned input.
  numerics::Var fuse(numerics::Graph& g, numerics::Var x) const;

  const numerics::Tensor& positional_table() const { return pe_; }

 private:
  FusionConfig cfg_;
  numerics::Tensor pe_;
  numerics::Parameter* w_in_;
  numerics::Parameter* b_in_;
  textenc::TransformerStack stack_;
};

/// Flatten, fully-connected layer to class logits.
class ClassifierHead {
 public:
  ClassifierHead(numerics::ParameterSet& params, const std::string& prefix, std::size_t in_features,
                 std::size_t classes, std::mt19937_64& rng);

  /// 1 x classes logits.
  numerics::Var logits(numerics::Graph& g, numerics::Var fused) const;
  std::size_t classes() const { return b_->value.size(); }

 private:
  numerics::Parameter* w_;
  numerics::Parameter* b_;
};

/// Softmax over a 1 x C logit row.
numerics::Var classify(numerics::Var logits);

/// Feature extraction and fusion shared by all output heads.
class FusionBackbone {
 public:
  FusionBackbone(numerics::ParameterSet& params, const std::string& prefix, const ModelSpec& spec,
                 std::mt19937_64& rng);

  PreparedPost prepare(const data::Post& post) const { return extractor_.prepare(post); }
  /// rows x d_f.
  numerics::Var forward(numerics::Graph& g, const PreparedPost& post) const;
  std::size_t flat_width() const;

  const FeatureExtractor& extractor() const { return extractor_; }
  const FusionStack& stack() const { return stack_; }

 private:
  FeatureExtractor extractor_;
  FusionStack stack_;
};

/// Text, categorical and time features fused by transformer blocks and
/// classified over POIs.
class TransTagger {
 public:
  TransTagger(numerics::ParameterSet& params, const std::string& prefix, const ModelSpec& spec, std::size_t classes,
              std::mt19937_64& rng);

  PreparedPost prepare(const data::Post& post) const { return backbone_.prepare(post); }
  numerics::Var logits(numerics::Graph& g, const PreparedPost& post) const;
  /// Eval-mode probabilities, B x classes.
  numerics::Tensor predict_proba(const std::vector<PreparedPost>& batch) const;
  std::size_t classes() const { return head_.classes(); }

  const FusionBackbone& backbone() const { return backbone_; }

 private:
  FusionBackbone backbone_;
  ClassifierHead head_;
};

}  // namespace geotag::fusion
