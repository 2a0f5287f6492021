// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "geotag/fusion/tagger.hpp"
#include "geotag/hierarchy/tree.hpp"
#include "geotag/numerics/trainer.hpp"

namespace geotag::hierarchy {

inline constexpr double kDefaultBlockThreshold = 0.01;

/// A transTagger over the children of one parent node.
struct LocalClassifier {
  int node = 0;
  std::unique_ptr<numerics::ParameterSet> params;
  std::unique_ptr<fusion::TransTagger> tagger;
  /// Set when no training post reached this node; prediction then falls back
  /// to a uniform prior over the children.
  bool prior_only = false;
};

struct LcpnPrediction {
  /// Leaf nodes, best first. Pruned leaves follow with score 0 in tree order.
  std::vector<int> ranking;
  std::vector<double> scores;
  /// Internal nodes whose children were scored.
  std::vector<int> expanded;
};

/// Local classifier per parent node with top-down beam prediction.
class LcpnModel {
 public:
  LcpnModel(PoiTree tree, const fusion::ModelSpec& spec, std::uint64_t seed,
            double theta = kDefaultBlockThreshold);

  const PoiTree& tree() const { return tree_; }
  const fusion::ModelSpec& spec() const { return spec_; }
  double theta() const { return theta_; }
  void set_theta(double theta);

  std::vector<LocalClassifier>& locals() { return locals_; }
  const std::vector<LocalClassifier>& locals() const { return locals_; }
  /// Classifier of `node`, or nullptr for single-child parents and leaves.
  const LocalClassifier* local(int node) const;

  fusion::PreparedPost prepare(const data::Post& post) const { return fusion::prepare_post(spec_, post); }
  /// Probability of each child of `node` given the post.
  std::vector<double> conditional(int node, const fusion::PreparedPost& post) const;
  LcpnPrediction predict(const fusion::PreparedPost& post) const;

 private:
  PoiTree tree_;
  fusion::ModelSpec spec_;
  double theta_;
  std::vector<LocalClassifier> locals_;
  std::vector<int> local_of_node_;
};

/// Trains every local classifier on the posts of its subtree, one epoch of
/// each classifier per run_epoch() call.
class LcpnTrainer {
 public:
  /// `leaves[i]` is the leaf node of `posts[i]`. Both must outlive the trainer.
  LcpnTrainer(LcpnModel& model, const std::vector<fusion::PreparedPost>& posts, const std::vector<int>& leaves,
              const numerics::TrainOptions& opts);

  /// Loss averaged over every (classifier, example) pair.
  numerics::EpochResult run_epoch();
  /// Training post indices routed to the classifier of `node`.
  const std::vector<std::size_t>& examples_for(int node) const;
  /// Nodes that received no training posts.
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  struct Job {
    int node = 0;
    std::vector<std::size_t> examples;
    std::vector<int> targets;
    std::unique_ptr<numerics::MinibatchTrainer> trainer;
  };
  std::vector<Job> jobs_;
  std::vector<std::string> warnings_;
};

}  // namespace geotag::hierarchy
