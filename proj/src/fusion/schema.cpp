// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include "geotag/fusion/schema.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "geotag/temporal/time.hpp"

namespace geotag::fusion {

std::string to_string(CtMode m) { return m == CtMode::text ? "text" : "onehot"; }

std::string to_string(TimeMode m) {
  switch (m) {
    case TimeMode::text: return "text";
    case TimeMode::onehot: return "onehot";
    case TimeMode::unihier: return "unihier";
  }
  return "?";
}

std::string to_string(PositionMode m) {
  switch (m) {
    case PositionMode::concat: return "concat";
    case PositionMode::add: return "add";
    case PositionMode::none: return "none";
  }
  return "?";
}

CtMode parse_ct_mode(std::string_view s) {
  if (s == "text") return CtMode::text;
  if (s == "onehot") return CtMode::onehot;
  throw std::invalid_argument("unknown CT mode '" + std::string(s) + "' (expected text|onehot)");
}

TimeMode parse_time_mode(std::string_view s) {
  if (s == "text") return TimeMode::text;
  if (s == "onehot") return TimeMode::onehot;
  if (s == "unihier") return TimeMode::unihier;
  throw std::invalid_argument("unknown time mode '" + std::string(s) + "' (expected text|onehot|unihier)");
}

PositionMode parse_position_mode(std::string_view s) {
  if (s == "concat") return PositionMode::concat;
  if (s == "add") return PositionMode::add;
  if (s == "none") return PositionMode::none;
  throw std::invalid_argument("unknown position mode '" + std::string(s) + "' (expected concat|add|none)");
}

void FeatureSchema::validate() const {
  if (text_fields.empty()) throw std::invalid_argument("schema: at least one text field is required");
  std::set<std::string> seen;
  for (const auto* list : {&text_fields, &ct_fields, &time_fields})
    for (const auto& f : *list) {
      if (f.empty()) throw std::invalid_argument("schema: empty field name");
      if (!seen.insert(f).second) throw std::invalid_argument("schema: field '" + f + "' listed twice");
    }
}

void to_json(nlohmann::json& j, const FeatureSchema& s) {
  j = {{"text_fields", s.text_fields},
       {"ct_fields", s.ct_fields},
       {"time_fields", s.time_fields},
       {"ct_mode", to_string(s.ct_mode)},
       {"time_mode", to_string(s.time_mode)}};
}

void from_json(const nlohmann::json& j, FeatureSchema& s) {
  FeatureSchema d;
  s.text_fields = j.value("text_fields", d.text_fields);
  s.ct_fields = j.value("ct_fields", d.ct_fields);
  s.time_fields = j.value("time_fields", d.time_fields);
  s.ct_mode = parse_ct_mode(j.value("ct_mode", to_string(d.ct_mode)));
  s.time_mode = parse_time_mode(j.value("time_mode", to_string(d.time_mode)));
}

CategoryVocab::CategoryVocab(std::vector<std::string> values) : values_(std::move(values)) {
  std::sort(values_.begin(), values_.end());
  values_.erase(std::unique(values_.begin(), values_.end()), values_.end());
  for (std::size_t i = 0; i < values_.size(); ++i) index_.emplace(values_[i], static_cast<int>(i) + 1);
}

int CategoryVocab::id(std::string_view value) const {
  auto it = index_.find(std::string(value));
  return it == index_.end() ? 0 : it->second;
}

std::vector<CategoryVocab> build_category_vocabs(const std::vector<data::Post>& posts, const FeatureSchema& schema) {
  std::vector<CategoryVocab> out;
  for (const auto& f : schema.ct_fields) {
    std::vector<std::string> values;
    for (const auto& p : posts) values.push_back(p.field(f));
    out.emplace_back(std::move(values));
  }
  return out;
}

textenc::Vocab build_feature_vocab(const std::vector<data::Post>& posts, const FeatureSchema& schema,
                                   std::size_t max_size) {
  std::vector<std::string> corpus;
  for (const auto& p : posts) {
    for (const auto& f : schema.text_fields) corpus.push_back(p.field(f));
    for (const auto& f : schema.ct_fields) corpus.push_back(p.field(f));
    for (const auto& f : schema.time_fields) corpus.push_back(temporal::time_as_text(p.field(f)));
  }
  return textenc::build_vocab(corpus, max_size);
}

}  // namespace geotag::fusion
