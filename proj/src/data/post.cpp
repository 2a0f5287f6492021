// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include "geotag/data/post.hpp"

#include <fstream>

#include "json.hpp"

namespace geotag::data {

using nlohmann::json;

const std::string& Post::field(std::string_view name) const {
  auto it = fields.find(name);
  if (it == fields.end()) throw DataError("post " + id + " has no field '" + std::string(name) + "'");
  return it->second;
}

bool valid_coordinates(double lat, double lon) { return lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0; }

namespace {

Post post_from_json(const json& j, std::size_t line_no) {
  auto where = [&] { return "line " + std::to_string(line_no) + ": "; };
  if (!j.is_object()) throw DataError(where() + "expected a JSON object");
  Post p;
  for (const char* key : {"lat", "lon"}) {
    if (!j.contains(key)) throw DataError(where() + "missing \"" + key + "\"");
    if (!j[key].is_number()) throw DataError(where() + "\"" + key + "\" must be a number");
  }
  p.lat = j["lat"].get<double>();
  p.lon = j["lon"].get<double>();
  if (!valid_coordinates(p.lat, p.lon)) throw DataError(where() + "coordinates out of range");
  if (!j.contains(kTimeFieldKey) || !j[kTimeFieldKey].is_string())
    throw DataError(where() + "missing \"created_at\"");
  p.fields.emplace(kTimeFieldKey, j[kTimeFieldKey].get<std::string>());
  for (auto key : kTextFieldKeys) {
    std::string value;
    if (j.contains(key) && !j[key].is_null()) {
      if (!j[key].is_string()) throw DataError(where() + "\"" + std::string(key) + "\" must be a string");
      value = j[key].get<std::string>();
    }
    p.fields.emplace(key, std::move(value));
  }
  if (j.contains("id")) {
    p.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
  } else {
    p.id = "line" + std::to_string(line_no);
  }
  if (j.contains("label") && j["label"].is_string()) p.label = j["label"].get<std::string>();
  return p;
}

}  // namespace

std::vector<Post> load_posts(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open posts file " + path.string());
  std::vector<Post> posts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    posts.push_back(post_from_json(j, line_no));
  }
  return posts;
}

std::string post_to_json_line(const Post& p) {
  json j = json::object();
  j["id"] = p.id;
  for (const auto& [k, v] : p.fields) j[k] = v;
  j["lat"] = p.lat;
  j["lon"] = p.lon;
  if (p.label) j["label"] = *p.label;
  return j.dump();
}

void save_posts(const std::filesystem::path& path, const std::vector<Post>& posts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write posts file " + path.string());
  for (const auto& p : posts) out << post_to_json_line(p) << '\n';
}

std::vector<Poi> load_pois(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open POI file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("POI file " + path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw DataError("POI file must hold a JSON array");
  std::vector<Poi> pois;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    try {
      Poi p{e.at("id").get<std::string>(),   e.value("name", std::string{}),
            e.at("theme").get<std::string>(), e.at("subtheme").get<std::string>(),
            e.at("lat").get<double>(),       e.at("lon").get<double>()};
      if (!valid_coordinates(p.lat, p.lon)) throw DataError("coordinates out of range");
      pois.push_back(std::move(p));
    } catch (const json::exception& ex) {
      throw DataError("POI entry " + std::to_string(i) + ": " + ex.what());
    }
  }
  return pois;
}

void save_pois(const std::filesystem::path& path, const std::vector<Poi>& pois) {
  json j = json::array();
  for (const auto& p : pois)
    j.push_back({{"id", p.id}, {"name", p.name}, {"theme", p.theme}, {"subtheme", p.subtheme}, {"lat", p.lat},
                 {"lon", p.lon}});
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write POI file " + path.string());
  out << j.dump(1) << '\n';
}

}  // namespace geotag::data
