// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>

#include "geotag/numerics/optim.hpp"

namespace geotag::numerics {

struct TrainOptions {
  double lr = 3e-4;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
};

/// Raised when a loss or gradient turns non-finite.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Loss of training example `i`, built in a training-mode graph.
using ExampleLoss = std::function<Var(Graph&, std::size_t)>;

struct EpochResult {
  double mean_loss = 0.0;
  /// Mean loss of the epoch's first batch, before that batch's update.
  double first_batch_loss = 0.0;
};

/// Shuffled mini-batch Adam over a fixed set of examples. Each example gets
/// its own graph; gradients are averaged over the batch before one update.
class MinibatchTrainer {
 public:
  MinibatchTrainer(ParameterSet& params, std::size_t examples, ExampleLoss loss, const TrainOptions& opts,
                   std::string label = "training");

  EpochResult run_epoch();
  std::size_t examples() const { return n_; }
  std::int64_t steps() const { return adam_.step; }

 private:
  ParameterSet& params_;
  std::size_t n_;
  ExampleLoss loss_;
  TrainOptions opts_;
  std::string label_;
  AdamState adam_;
  std::mt19937_64 shuffle_rng_;
  std::uint64_t graph_seed_;
  int epoch_ = 0;
};

}  // namespace geotag::numerics
