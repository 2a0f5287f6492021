// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include "geotag/hierarchy/lcpn.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace geotag::hierarchy {

using numerics::Graph;

LcpnModel::LcpnModel(PoiTree tree, const fusion::ModelSpec& spec, std::uint64_t seed, double theta)
    : tree_(std::move(tree)), spec_((spec.validate(), spec)), theta_(0.0) {
  set_theta(theta);
  std::mt19937_64 rng(seed);
  local_of_node_.assign(tree_.size(), -1);
  for (std::size_t i = 0; i < tree_.size(); ++i) {
    const auto& n = tree_.nodes()[i];
    if (n.children.size() < 2) continue;
    LocalClassifier lc;
    lc.node = static_cast<int>(i);
    lc.params = std::make_unique<numerics::ParameterSet>();
    lc.tagger = std::make_unique<fusion::TransTagger>(*lc.params, "node" + std::to_string(i) + ".", spec_,
                                                      n.children.size(), rng);
    local_of_node_[i] = static_cast<int>(locals_.size());
    locals_.push_back(std::move(lc));
  }
}

void LcpnModel::set_theta(double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("block threshold must lie in [0, 1]");
  theta_ = theta;
}

const LocalClassifier* LcpnModel::local(int node) const {
  const int k = local_of_node_.at(static_cast<std::size_t>(node));
  return k < 0 ? nullptr : &locals_[static_cast<std::size_t>(k)];
}

std::vector<double> LcpnModel::conditional(int node, const fusion::PreparedPost& post) const {
  const std::size_t n = tree_.node(node).children.size();
  if (n == 0) throw std::invalid_argument("conditional: node " + tree_.node(node).id + " is a leaf");
  const LocalClassifier* lc = local(node);
  if (!lc) return {1.0};
  if (lc->prior_only) return std::vector<double>(n, 1.0 / static_cast<double>(n));
  Graph g;
  const auto& p = fusion::classify(lc->tagger->logits(g, post)).value().storage();
  return {p.begin(), p.end()};
}

LcpnPrediction LcpnModel::predict(const fusion::PreparedPost& post) const {
  std::vector<double> score(tree_.size(), 0.0);
  std::vector<char> reached(tree_.size(), 0);
  LcpnPrediction out;
  std::vector<int> frontier = {0};
  reached[0] = 1;
  score[0] = 1.0;
  while (!frontier.empty()) {
    std::vector<int> next;
    for (int node : frontier) {
      const auto& ch = tree_.node(node).children;
      if (ch.empty()) continue;
      out.expanded.push_back(node);
      const auto p = conditional(node, post);
      const std::size_t best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
      for (std::size_t c = 0; c < ch.size(); ++c) {
        if (p[c] < theta_ && c != best) continue;
        const auto child = static_cast<std::size_t>(ch[c]);
        reached[child] = 1;
        score[child] = score[static_cast<std::size_t>(node)] * p[c];
        next.push_back(ch[c]);
      }
    }
    frontier = std::move(next);
  }
  const auto& leaves = tree_.level_nodes(Level::poi);
  std::vector<int> kept, pruned;
  for (int l : leaves) (reached[static_cast<std::size_t>(l)] ? kept : pruned).push_back(l);
  std::stable_sort(kept.begin(), kept.end(), [&](int a, int b) {
    return score[static_cast<std::size_t>(a)] > score[static_cast<std::size_t>(b)];
  });
  for (int l : kept) {
    out.ranking.push_back(l);
    out.scores.push_back(score[static_cast<std::size_t>(l)]);
  }
  for (int l : pruned) {
    out.ranking.push_back(l);
    out.scores.push_back(0.0);
  }
  return out;
}

LcpnTrainer::LcpnTrainer(LcpnModel& model, const std::vector<fusion::PreparedPost>& posts,
                         const std::vector<int>& leaves, const numerics::TrainOptions& opts) {
  if (posts.size() != leaves.size()) throw std::invalid_argument("lcpn: posts and leaves differ in length");
  const PoiTree& tree = model.tree();
  std::vector<std::vector<int>> paths;
  for (int leaf : leaves) {
    if (leaf < 0 || static_cast<std::size_t>(leaf) >= tree.size() || !tree.node(leaf).children.empty() ||
        tree.node(leaf).depth < 0)
      throw std::invalid_argument("lcpn: training label is not a leaf of the tree");
    auto p = tree.path(leaf);
    p.insert(p.begin(), 0);
    paths.push_back(std::move(p));
  }
  std::size_t k = 0;
  for (auto& lc : model.locals()) {
    Job job;
    job.node = lc.node;
    const auto& children = tree.node(lc.node).children;
    for (std::size_t i = 0; i < paths.size(); ++i) {
      const auto& path = paths[i];
      auto it = std::find(path.begin(), path.end(), lc.node);
      if (it == path.end()) continue;
      const int child = *(it + 1);
      job.examples.push_back(i);
      job.targets.push_back(static_cast<int>(std::find(children.begin(), children.end(), child) - children.begin()));
    }
    lc.prior_only = job.examples.empty();
    if (lc.prior_only) warnings_.push_back("node " + tree.node(lc.node).id + " has no training posts; using a uniform prior");
    numerics::TrainOptions o = opts;
    o.seed = opts.seed + 1000003ULL * ++k;
    const fusion::TransTagger* tagger = lc.tagger.get();
    jobs_.push_back(std::move(job));
    const std::size_t j = jobs_.size() - 1;
    jobs_[j].trainer = std::make_unique<numerics::MinibatchTrainer>(
        *lc.params, jobs_[j].examples.size(),
        [this, j, tagger, &posts](Graph& g, std::size_t e) {
          const Job& jb = jobs_[j];
          return numerics::cross_entropy(tagger->logits(g, posts[jb.examples[e]]), {jb.targets[e]});
        },
        o, "lcpn node " + tree.node(lc.node).id);
  }
}

const std::vector<std::size_t>& LcpnTrainer::examples_for(int node) const {
  for (const auto& job : jobs_)
    if (job.node == node) return job.examples;
  throw std::out_of_range("lcpn: no local classifier at node " + std::to_string(node));
}

numerics::EpochResult LcpnTrainer::run_epoch() {
  numerics::EpochResult out;
  double total = 0.0, first = 0.0;
  std::size_t n = 0, first_n = 0;
  for (auto& job : jobs_) {
    if (job.examples.empty()) continue;
    const auto r = job.trainer->run_epoch();
    total += r.mean_loss * static_cast<double>(job.examples.size());
    first += r.first_batch_loss;
    ++first_n;
    n += job.examples.size();
  }
  if (n > 0) out.mean_loss = total / static_cast<double>(n);
  if (first_n > 0) out.first_batch_loss = first / static_cast<double>(first_n);
  return out;
}

}  // namespace geotag::hierarchy
