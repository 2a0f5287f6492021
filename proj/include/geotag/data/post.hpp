// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace geotag::data {

/// Field names understood by the JSON-lines reader.
inline constexpr std::string_view kTextFieldKeys[] = {"text", "user_location", "user_description", "source"};
inline constexpr std::string_view kTimeFieldKey = "created_at";

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Post {
  std::string id;
  /// Named textual, categorical and time fields.
  std::map<std::string, std::string, std::less<>> fields;
  double lat = 0.0;
  double lon = 0.0;
  std::optional<std::string> label;

  /// Throws DataError naming the field if it is absent.
  const std::string& field(std::string_view name) const;
};

struct Poi {
  std::string id;
  std::string name;
  std::string theme;
  std::string subtheme;
  double lat = 0.0;
  double lon = 0.0;
};

bool valid_coordinates(double lat, double lon);

/// JSON-lines, one post per line. Unknown keys are ignored; missing text
/// fields become empty strings; `lat`, `lon` and `created_at` are required.
std::vector<Post> load_posts(const std::filesystem::path& path);
void save_posts(const std::filesystem::path& path, const std::vector<Post>& posts);
/// Serialized form of one post (the line save_posts writes).
std::string post_to_json_line(const Post& post);

/// JSON array of {id, name, theme, subtheme, lat, lon}.
std::vector<Poi> load_pois(const std::filesystem::path& path);
void save_pois(const std::filesystem::path& path, const std::vector<Poi>& pois);

}  // namespace geotag::data
