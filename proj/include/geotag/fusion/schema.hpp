// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "geotag/data/post.hpp"
#include "geotag/textenc/vocab.hpp"
#include "json.hpp"

namespace geotag::fusion {

enum class CtMode { text, onehot };
enum class TimeMode { text, onehot, unihier };
enum class PositionMode { concat, add, none };

std::string to_string(CtMode m);
std::string to_string(TimeMode m);
std::string to_string(PositionMode m);
/// Throw std::invalid_argument on unknown names.
CtMode parse_ct_mode(std::string_view s);
TimeMode parse_time_mode(std::string_view s);
PositionMode parse_position_mode(std::string_view s);

/// Which post fields feed the model and how. Feature rows follow this order:
/// text fields, categorical fields, then time fields.
struct FeatureSchema {
  std::vector<std::string> text_fields = {"text", "user_location", "user_description"};
  std::vector<std::string> ct_fields = {"source"};
  std::vector<std::string> time_fields = {"created_at"};
  CtMode ct_mode = CtMode::text;
  TimeMode time_mode = TimeMode::text;

  std::size_t rows() const { return text_fields.size() + ct_fields.size() + time_fields.size(); }
  void validate() const;
  bool operator==(const FeatureSchema&) const = default;
};

void to_json(nlohmann::json& j, const FeatureSchema& s);
void from_json(const nlohmann::json& j, FeatureSchema& s);

/// Observed values of one categorical field. Id 0 is the unknown category;
/// known values follow in lexicographic order.
class CategoryVocab {
 public:
  CategoryVocab() = default;
  explicit CategoryVocab(std::vector<std::string> values);

  int id(std::string_view value) const;
  /// Number of rows a one-hot projection needs, including the unknown row.
  std::size_t size() const { return values_.size() + 1; }
  const std::vector<std::string>& values() const { return values_; }
  bool operator==(const CategoryVocab& o) const { return values_ == o.values_; }

 private:
  std::vector<std::string> values_;
  std::unordered_map<std::string, int> index_;
};

/// One vocabulary per categorical field of the schema.
std::vector<CategoryVocab> build_category_vocabs(const std::vector<data::Post>& posts, const FeatureSchema& schema);

/// Token vocabulary over every text the schema could route through the text
/// encoder: text fields, categorical values and time-as-text strings.
textenc::Vocab build_feature_vocab(const std::vector<data::Post>& posts, const FeatureSchema& schema,
                                   std::size_t max_size);

}  // namespace geotag::fusion
