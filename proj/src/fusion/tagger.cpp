// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include "geotag/fusion/tagger.hpp"

#include <cmath>
#include <stdexcept>

#include "geotag/fusion/positional.hpp"
#include "geotag/temporal/time.hpp"

namespace geotag::fusion {

using numerics::Graph;
using numerics::Parameter;
using numerics::Tensor;
using numerics::Var;

namespace {

Parameter& xavier(numerics::ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
                  std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(in + out));
  return params.add(name, Tensor::uniform({in, out}, -a, a, rng));
}

}  // namespace

void FusionConfig::validate() const {
  textenc::StackShape{layers, heads, width, ff, dropout}.validate("fusion");
}

void to_json(nlohmann::json& j, const FusionConfig& c) {
  j = {{"layers", c.layers}, {"heads", c.heads},       {"width", c.width},
       {"ff", c.ff},         {"dropout", c.dropout},   {"position", to_string(c.position)},
       {"use_encoder", c.use_encoder}};
}

void from_json(const nlohmann::json& j, FusionConfig& c) {
  FusionConfig d;
  c.layers = j.value("layers", d.layers);
  c.heads = j.value("heads", d.heads);
  c.width = j.value("width", d.width);
  c.ff = j.value("ff", d.ff);
  c.dropout = j.value("dropout", d.dropout);
  c.position = parse_position_mode(j.value("position", to_string(d.position)));
  c.use_encoder = j.value("use_encoder", d.use_encoder);
}

void ModelSpec::validate() const {
  schema.validate();
  encoder.validate();
  fusion.validate();
  if (!vocab) throw std::invalid_argument("model spec: no vocabulary");
  if (categories.size() != schema.ct_fields.size())
    throw std::invalid_argument("model spec: " + std::to_string(categories.size()) + " category vocabularies for " +
                                std::to_string(schema.ct_fields.size()) + " categorical fields");
  if (fusion.position != PositionMode::none && encoder.hidden % 2 != 0)
    throw std::invalid_argument("model spec: positional encodings need an even hidden size");
}

// ---- FeatureExtractor ------------------------------------------------------

FeatureExtractor::FeatureExtractor(numerics::ParameterSet& params, const std::string& prefix, const ModelSpec& spec,
                                   std::mt19937_64& rng)
    : spec_((spec.validate(), spec)), text_(params, spec.encoder, spec.vocab->size(), rng, prefix + "text") {
  const auto h = static_cast<std::size_t>(spec.encoder.hidden);
  if (spec.schema.ct_mode == CtMode::onehot)
    for (std::size_t i = 0; i < spec.schema.ct_fields.size(); ++i)
      ct_proj_.push_back(&params.add(prefix + "ct." + spec.schema.ct_fields[i] + ".proj",
                                     Tensor::uniform({spec.categories[i].size(), h}, -0.02, 0.02, rng)));
  for (const auto& f : spec.schema.time_fields) {
    if (spec.schema.time_mode == TimeMode::unihier)
      unihier_.emplace_back(params, h, rng, spec.time_minute, prefix + "time." + f);
    else if (spec.schema.time_mode == TimeMode::onehot)
      onehot_time_.emplace_back(params, h, rng, prefix + "time." + f);
  }
}

PreparedPost prepare_post(const ModelSpec& spec, const data::Post& post) {
  const auto& s = spec.schema;
  const auto max_len = spec.encoder.max_len;
  PreparedPost out;
  for (const auto& f : s.text_fields) out.sequences.push_back(textenc::tokenize(post.field(f), *spec.vocab, max_len));
  for (std::size_t i = 0; i < s.ct_fields.size(); ++i) {
    const std::string& v = post.field(s.ct_fields[i]);
    if (s.ct_mode == CtMode::text)
      out.sequences.push_back(textenc::tokenize(v, *spec.vocab, max_len));
    else
      out.categories.push_back(spec.categories[i].id(v));
  }
  for (const auto& f : s.time_fields) {
    const std::string& v = post.field(f);
    if (s.time_mode == TimeMode::text)
      out.sequences.push_back(textenc::tokenize(temporal::time_as_text(v), *spec.vocab, max_len));
    else
      out.times.push_back(temporal::decompose_timestamp(v));
  }
  return out;
}

Var FeatureExtractor::assemble(Graph& g, const PreparedPost& post) const {
  const auto& s = spec_.schema;
  std::vector<Var> rows;
  rows.reserve(s.rows());
  std::size_t seq = 0;
  auto next_text = [&] {
    if (seq >= post.sequences.size()) throw std::invalid_argument("prepared post has too few token sequences");
    return text_.encode_cls(g, post.sequences[seq++]);
  };
  for (std::size_t i = 0; i < s.text_fields.size(); ++i) rows.push_back(next_text());
  for (std::size_t i = 0; i < s.ct_fields.size(); ++i) {
    if (s.ct_mode == CtMode::text) {
      rows.push_back(next_text());
    } else {
      const int id = post.categories.at(i);
      rows.push_back(numerics::embed_lookup(g.param(*ct_proj_[i]), {id}));
    }
  }
  for (std::size_t i = 0; i < s.time_fields.size(); ++i) {
    switch (s.time_mode) {
      case TimeMode::text: rows.push_back(next_text()); break;
      case TimeMode::unihier: rows.push_back(unihier_[i].embed(g, post.times.at(i))); break;
      case TimeMode::onehot: rows.push_back(onehot_time_[i].embed(g, post.times.at(i))); break;
    }
  }
  return rows.size() == 1 ? rows[0] : numerics::concat(rows, 0);
}

Var FeatureExtractor::encode_categorical(Graph& g, std::size_t field, const std::string& value) const {
  if (field >= spec_.schema.ct_fields.size()) throw std::out_of_range("no categorical field " + std::to_string(field));
  if (spec_.schema.ct_mode == CtMode::text)
    return text_.encode_cls(g, textenc::tokenize(value, *spec_.vocab, spec_.encoder.max_len));
  return numerics::embed_lookup(g.param(*ct_proj_[field]), {spec_.categories[field].id(value)});
}

// ---- FusionStack -----------------------------------------------------------

FusionStack::FusionStack(numerics::ParameterSet& params, const std::string& prefix, const FusionConfig& cfg,
                         std::size_t rows, std::size_t hidden, std::mt19937_64& rng)
    : cfg_((cfg.validate(), cfg)),
      pe_(cfg.position == PositionMode::none ? Tensor() : make_positional_encoding(rows, hidden)),
      w_in_(&xavier(params, prefix + "fusion.in_proj.w",
                    cfg.position == PositionMode::concat ? 2 * hidden : hidden, static_cast<std::size_t>(cfg.width),
                    rng)),
      b_in_(&params.add(prefix + "fusion.in_proj.b", Tensor({static_cast<std::size_t>(cfg.width)}))),
      stack_(params, prefix + "fusion",
             {cfg.use_encoder ? cfg.layers : 0, cfg.heads, cfg.width, cfg.ff, cfg.dropout}, rng) {}

Var FusionStack::forward(Graph& g, Var features) const {
  return fuse(g, apply_positions(g, features, pe_, cfg_.position));
}

Var FusionStack::fuse(Graph& g, Var x) const {
  const std::size_t want = w_in_->value.rows();
  if (x.value().cols() != want)
    throw numerics::ShapeError("fusion input width " + std::to_string(x.value().cols()) + " != " +
                               std::to_string(want));
  return stack_.forward(g, textenc::affine(g, x, *w_in_, *b_in_), nullptr);
}

// ---- heads -----------------------------------------------------------------

ClassifierHead::ClassifierHead(numerics::ParameterSet& params, const std::string& prefix, std::size_t in_features,
                               std::size_t classes, std::mt19937_64& rng) {
  if (classes == 0) throw std::invalid_argument("classifier head " + prefix + ": zero classes");
  w_ = &xavier(params, prefix + ".w", in_features, classes, rng);
  b_ = &params.add(prefix + ".b", Tensor({classes}));
}

Var ClassifierHead::logits(Graph& g, Var fused) const {
  const std::size_t n = fused.value().size();
  if (n != w_->value.rows())
    throw numerics::ShapeError("classifier head expects " + std::to_string(w_->value.rows()) + " inputs, got " +
                               std::to_string(n));
  return textenc::affine(g, numerics::reshape(fused, {1, n}), *w_, *b_);
}

Var classify(Var logits) { return numerics::softmax(logits); }

// ---- FusionBackbone / TransTagger -----------------------------------------

FusionBackbone::FusionBackbone(numerics::ParameterSet& params, const std::string& prefix, const ModelSpec& spec,
                               std::mt19937_64& rng)
    : extractor_(params, prefix, spec, rng),
      stack_(params, prefix, spec.fusion, spec.schema.rows(), static_cast<std::size_t>(spec.encoder.hidden), rng) {}

Var FusionBackbone::forward(Graph& g, const PreparedPost& post) const {
  return stack_.forward(g, extractor_.assemble(g, post));
}

std::size_t FusionBackbone::flat_width() const {
  return extractor_.spec().schema.rows() * static_cast<std::size_t>(extractor_.spec().fusion.width);
}

TransTagger::TransTagger(numerics::ParameterSet& params, const std::string& prefix, const ModelSpec& spec,
                         std::size_t classes, std::mt19937_64& rng)
    : backbone_(params, prefix, spec, rng), head_(params, prefix + "head", backbone_.flat_width(), classes, rng) {}

Var TransTagger::logits(Graph& g, const PreparedPost& post) const {
  return head_.logits(g, backbone_.forward(g, post));
}

Tensor TransTagger::predict_proba(const std::vector<PreparedPost>& batch) const {
  const std::size_t c = classes();
  Tensor out({batch.size(), c});
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Graph g;
    const Tensor& p = classify(logits(g, batch[i])).value();
    std::copy(p.data().begin(), p.data().end(), out.row(i).begin());
  }
  return out;
}

}  // namespace geotag::fusion
