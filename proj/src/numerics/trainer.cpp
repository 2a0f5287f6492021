// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include "geotag/numerics/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace geotag::numerics {

MinibatchTrainer::MinibatchTrainer(ParameterSet& params, std::size_t examples, ExampleLoss loss,
                                   const TrainOptions& opts, std::string label)
    : params_(params),
      n_(examples),
      loss_(std::move(loss)),
      opts_(opts),
      label_(std::move(label)),
      shuffle_rng_(opts.seed),
      graph_seed_(opts.seed * 0x9E3779B97F4A7C15ULL + 1) {
  if (opts.batch_size == 0) throw std::invalid_argument(label_ + ": batch size must be positive");
  if (!(opts.lr > 0.0)) throw std::invalid_argument(label_ + ": learning rate must be positive");
  adam_.options.lr = opts.lr;
}

EpochResult MinibatchTrainer::run_epoch() {
  ++epoch_;
  EpochResult out;
  if (n_ == 0) return out;
  std::vector<std::size_t> order(n_);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), shuffle_rng_);
  double total = 0.0;
  for (std::size_t begin = 0, batch = 0; begin < n_; begin += opts_.batch_size, ++batch) {
    const std::size_t end = std::min(n_, begin + opts_.batch_size);
    const double inv = 1.0 / static_cast<double>(end - begin);
    params_.zero_grad();
    double batch_loss = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      Graph g(true, graph_seed_++);
      Var loss = loss_(g, order[k]);
      const double v = loss.value()[0];
      if (!std::isfinite(v))
        throw TrainingDiverged(label_ + ": non-finite loss " + std::to_string(v) + " at epoch " +
                               std::to_string(epoch_) + ", batch " + std::to_string(batch) + ", example " +
                               std::to_string(order[k]));
      batch_loss += v;
      g.backward(scale(loss, inv));
    }
    if (batch == 0) out.first_batch_loss = batch_loss * inv;
    total += batch_loss;
    try {
      adam_step(params_, adam_);
    } catch (const std::runtime_error& e) {
      throw TrainingDiverged(label_ + ": epoch " + std::to_string(epoch_) + ", batch " + std::to_string(batch) +
                             ": " + e.what());
    }
  }
  out.mean_loss = total / static_cast<double>(n_);
  return out;
}

}  // namespace geotag::numerics
