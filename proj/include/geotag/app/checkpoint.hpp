// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <stdexcept>

#include "geotag/app/model.hpp"

namespace geotag::app {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kBlobFile = "params.bin";

/// Writes manifest.json, params.bin (little-endian float32 in manifest
/// order), vocab.txt, pois.json and, for tree variants, tree.json into `dir`.
void save_checkpoint(const GeoModel& model, const std::filesystem::path& dir);

/// Throws CheckpointError on missing files, truncated blobs, missing or
/// extra tensors and shape mismatches.
GeoModel load_checkpoint(const std::filesystem::path& dir);

}  // namespace geotag::app
