// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include "geotag/app/config.hpp"

#include <fstream>
#include <stdexcept>

namespace geotag::app {

using nlohmann::json;

std::string to_string(Variant v) {
  switch (v) {
    case Variant::trans: return "trans";
    case Variant::hier: return "hier";
    case Variant::mtl: return "mtl";
  }
  return "?";
}

Variant parse_variant(std::string_view s) {
  if (s == "trans") return Variant::trans;
  if (s == "hier") return Variant::hier;
  if (s == "mtl") return Variant::mtl;
  throw std::invalid_argument("unknown model variant '" + std::string(s) + "' (expected trans|hier|mtl)");
}

void RunConfig::validate() const {
  schema.validate();
  encoder.validate();
  fusion.validate();
  if (!(lr > 0.0)) throw std::invalid_argument("config: lr must be positive");
  if (batch_size == 0) throw std::invalid_argument("config: batch_size must be positive");
  if (epochs < 0) throw std::invalid_argument("config: epochs must be non-negative");
  if (block_threshold < 0.0 || block_threshold > 1.0)
    throw std::invalid_argument("config: block_threshold must lie in [0, 1]");
  if (mtl.theme < 0 || mtl.subtheme < 0 || mtl.poi < 0 || mtl.lambda_c < 0)
    throw std::invalid_argument("config: mtl weights must be non-negative");
}

void to_json(json& j, const RunConfig& c) {
  json levels = json::array();
  for (auto l : c.hier_levels) levels.push_back(hierarchy::to_string(l));
  j = {{"variant", to_string(c.variant)},
       {"schema", c.schema},
       {"encoder",
        {{"layers", c.encoder.layers},
         {"heads", c.encoder.heads},
         {"hidden", c.encoder.hidden},
         {"ff", c.encoder.ff},
         {"dropout", c.encoder.dropout},
         {"max_len", c.encoder.max_len},
         {"vocab_size", c.encoder.vocab_size}}},
       {"fusion", c.fusion},
       {"time_minute", c.time_minute},
       {"lr", c.lr},
       {"batch_size", c.batch_size},
       {"epochs", c.epochs},
       {"block_threshold", c.block_threshold},
       {"hier_levels", levels},
       {"mtl_weights", {{"theme", c.mtl.theme}, {"subtheme", c.mtl.subtheme}, {"poi", c.mtl.poi}}},
       {"lambda_c", c.mtl.lambda_c},
       {"seed", c.seed},
       {"data",
        {{"train", c.data.train.string()},
         {"val", c.data.val.string()},
         {"test", c.data.test.string()},
         {"pois", c.data.pois.string()}}},
       {"output", c.output.string()}};
}

void from_json(const json& j, RunConfig& c) {
  static const std::vector<std::string> known = {"variant", "schema",      "encoder",         "fusion",
                                                 "time_minute", "lr",     "batch_size",      "epochs",
                                                 "block_threshold", "hier_levels", "mtl_weights", "lambda_c",
                                                 "seed",    "data",        "output"};
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw std::invalid_argument("config: unknown key '" + key + "'");
  RunConfig d;
  c = d;
  c.variant = parse_variant(j.value("variant", to_string(d.variant)));
  if (j.contains("schema")) c.schema = j.at("schema").get<fusion::FeatureSchema>();
  if (j.contains("encoder")) {
    const auto& e = j.at("encoder");
    c.encoder.layers = e.value("layers", d.encoder.layers);
    c.encoder.heads = e.value("heads", d.encoder.heads);
    c.encoder.hidden = e.value("hidden", d.encoder.hidden);
    c.encoder.ff = e.value("ff", d.encoder.ff);
    c.encoder.dropout = e.value("dropout", d.encoder.dropout);
    c.encoder.max_len = e.value("max_len", d.encoder.max_len);
    c.encoder.vocab_size = e.value("vocab_size", d.encoder.vocab_size);
  }
  if (j.contains("fusion")) c.fusion = j.at("fusion").get<fusion::FusionConfig>();
  c.time_minute = j.value("time_minute", d.time_minute);
  c.lr = j.value("lr", d.lr);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.epochs = j.value("epochs", d.epochs);
  c.block_threshold = j.value("block_threshold", d.block_threshold);
  if (j.contains("hier_levels")) {
    c.hier_levels.clear();
    for (const auto& l : j.at("hier_levels")) c.hier_levels.push_back(hierarchy::parse_level(l.get<std::string>()));
  }
  if (j.contains("mtl_weights")) {
    const auto& w = j.at("mtl_weights");
    c.mtl.theme = w.value("theme", d.mtl.theme);
    c.mtl.subtheme = w.value("subtheme", d.mtl.subtheme);
    c.mtl.poi = w.value("poi", d.mtl.poi);
  }
  c.mtl.lambda_c = j.value("lambda_c", d.mtl.lambda_c);
  c.seed = j.value("seed", d.seed);
  if (j.contains("data")) {
    const auto& p = j.at("data");
    c.data.train = p.value("train", std::string());
    c.data.val = p.value("val", std::string());
    c.data.test = p.value("test", std::string());
    c.data.pois = p.value("pois", std::string());
  }
  c.output = j.value("output", d.output.string());
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config " + path.string() + ": " + e.what());
  }
  RunConfig c = j.get<RunConfig>();
  const auto base = path.parent_path();
  for (auto* p : {&c.data.train, &c.data.val, &c.data.test, &c.data.pois, &c.output})
    if (!p->empty() && p->is_relative()) *p = base / *p;
  c.validate();
  return c;
}

}  // namespace geotag::app
