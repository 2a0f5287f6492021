// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "geotag/app/train.hpp"

namespace geotag::app {

enum class Ablation { full, no_transformer, no_position };

std::string to_string(Ablation a);
/// "Text-UniHier" and friends: categorical mode, then time mode.
std::string combination_name(fusion::CtMode ct, fusion::TimeMode time);

struct GridCell {
  fusion::CtMode ct = fusion::CtMode::text;
  fusion::TimeMode time = fusion::TimeMode::text;
  Ablation ablation = Ablation::full;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  /// Final-epoch validation acc@1.
  double val_acc1 = 0.0;
  /// Metrics on the test set, or on the validation set when there is none.
  data::MetricsReport metrics;
};

struct GridReport {
  /// Ablation-major, then categorical mode, then time mode.
  std::vector<GridCell> cells;

  const GridCell& at(fusion::CtMode ct, fusion::TimeMode time, Ablation a) const;
  void write_text(std::ostream& out) const;
  void write_csv(std::ostream& out) const;
};

struct GridData {
  std::vector<data::Poi> pois;
  std::vector<data::Post> train;
  std::vector<data::Post> val;
  std::vector<data::Post> test;
};

/// The configuration of one grid cell.
RunConfig cell_config(const RunConfig& base, fusion::CtMode ct, fusion::TimeMode time, Ablation a);

/// Trains and evaluates 6 representation combinations under 3 ablation
/// settings. A cell that throws is recorded as failed and the grid goes on.
GridReport run_grid(const RunConfig& base, const GridData& data,
                    const std::function<void(const GridCell&)>& on_cell = {});

}  // namespace geotag::app
