// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "geotag/fusion/tagger.hpp"
#include "geotag/hierarchy/mtl.hpp"
#include "geotag/hierarchy/tree.hpp"
#include "json.hpp"

namespace geotag::app {

enum class Variant { trans, hier, mtl };

std::string to_string(Variant v);
Variant parse_variant(std::string_view s);

struct DataPaths {
  std::filesystem::path train;
  std::filesystem::path val;
  std::filesystem::path test;
  std::filesystem::path pois;
};

struct RunConfig {
  Variant variant = Variant::trans;
  fusion::FeatureSchema schema;
  textenc::EncoderConfig encoder;
  fusion::FusionConfig fusion;
  bool time_minute = false;
  double lr = 3e-4;
  std::size_t batch_size = 128;
  int epochs = 4;
  double block_threshold = 0.01;
  std::vector<hierarchy::Level> hier_levels = {hierarchy::Level::theme, hierarchy::Level::poi};
  hierarchy::MtlWeights mtl;
  std::uint64_t seed = 7;
  DataPaths data;
  std::filesystem::path output = "run";

  void validate() const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

/// Reads a JSON config; relative paths resolve against the file's directory.
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace geotag::app
