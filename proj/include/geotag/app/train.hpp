// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "geotag/app/model.hpp"
#include "geotag/data/metrics.hpp"

namespace geotag::app {

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  /// NaN when there is no validation set.
  double val_acc1 = 0.0;
};

struct History {
  /// Mean loss of the first mini-batch, before any update.
  std::optional<double> initial_loss;
  std::vector<EpochRecord> epochs;
  std::vector<std::string> warnings;
};

void save_history_csv(const std::filesystem::path& path, const History& h);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains `model` for cfg.epochs epochs. Every post needs a label from the
/// model's class list. Throws numerics::TrainingDiverged on a non-finite loss.
History fit(GeoModel& model, const std::vector<data::Post>& train, const std::vector<data::Post>& val,
            const EpochCallback& on_epoch = {});

struct TrainResult {
  GeoModel model;
  History history;
};

TrainResult train(const RunConfig& cfg, const std::vector<data::Poi>& pois, const std::vector<data::Post>& train,
                  const std::vector<data::Post>& val, const EpochCallback& on_epoch = {});

/// Class index of every post's label; throws if a label is missing or
/// unknown to the model.
std::vector<int> class_labels(const GeoModel& model, const std::vector<data::Post>& posts);

std::vector<ScoredPrediction> predict_all(const GeoModel& model, const std::vector<data::Post>& posts);

data::MetricsReport evaluate(const GeoModel& model, const std::vector<data::Post>& posts);

}  // namespace geotag::app
