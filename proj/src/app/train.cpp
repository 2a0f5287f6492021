// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include "geotag/app/train.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "geotag/numerics/trainer.hpp"

namespace geotag::app {

using numerics::Graph;

void save_history_csv(const std::filesystem::path& path, const History& h) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(8);
  out << "epoch,train_loss,val_acc1\n";
  if (h.initial_loss) out << "0," << *h.initial_loss << ",\n";
  for (const auto& e : h.epochs) out << e.epoch << ',' << e.train_loss << ',' << e.val_acc1 << '\n';
}

std::vector<int> class_labels(const GeoModel& model, const std::vector<data::Post>& posts) {
  std::vector<int> out;
  out.reserve(posts.size());
  for (const auto& p : posts) {
    if (!p.label) throw std::invalid_argument("post " + p.id + " has no label");
    const int c = model.class_of(*p.label);
    if (c < 0) throw std::invalid_argument("post " + p.id + ": label " + *p.label + " is not a class of the model");
    out.push_back(c);
  }
  return out;
}

std::vector<ScoredPrediction> predict_all(const GeoModel& model, const std::vector<data::Post>& posts) {
  std::vector<ScoredPrediction> out;
  out.reserve(posts.size());
  for (const auto& p : posts) out.push_back(model.predict(model.prepare(p)));
  return out;
}

data::MetricsReport evaluate(const GeoModel& model, const std::vector<data::Post>& posts) {
  const auto labels = class_labels(model, posts);
  std::vector<std::vector<int>> rankings;
  rankings.reserve(posts.size());
  for (auto& p : predict_all(model, posts)) rankings.push_back(std::move(p.ranking));
  std::vector<std::pair<double, double>> coords;
  for (const auto& poi : model.pois()) coords.emplace_back(poi.lat, poi.lon);
  return data::compute_metrics(rankings, labels, coords);
}

namespace {

double val_accuracy(const GeoModel& model, const std::vector<fusion::PreparedPost>& val, const std::vector<int>& labels) {
  if (val.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < val.size(); ++i) hits += model.predict(val[i]).ranking.front() == labels[i];
  return static_cast<double>(hits) / static_cast<double>(val.size());
}

}  // namespace

History fit(GeoModel& model, const std::vector<data::Post>& train, const std::vector<data::Post>& val,
            const EpochCallback& on_epoch) {
  const RunConfig& cfg = model.config();
  const auto train_labels = class_labels(model, train);
  const auto val_labels = class_labels(model, val);
  std::vector<fusion::PreparedPost> tp, vp;
  tp.reserve(train.size());
  for (const auto& p : train) tp.push_back(model.prepare(p));
  for (const auto& p : val) vp.push_back(model.prepare(p));

  History h;
  if (cfg.epochs == 0) return h;
  if (train.empty()) throw std::invalid_argument("training set is empty");

  numerics::TrainOptions opts{cfg.lr, cfg.batch_size, cfg.seed};
  std::unique_ptr<numerics::MinibatchTrainer> flat;
  std::unique_ptr<hierarchy::LcpnTrainer> hier;
  std::vector<int> leaves;

  switch (cfg.variant) {
    case Variant::trans: {
      const fusion::TransTagger* t = model.trans();
      flat = std::make_unique<numerics::MinibatchTrainer>(
          *model.parameter_sets().front(), tp.size(),
          [t, &tp, &train_labels](Graph& g, std::size_t i) {
            return numerics::cross_entropy(t->logits(g, tp[i]), {train_labels[i]});
          },
          opts, "trans");
      break;
    }
    case Variant::mtl: {
      const hierarchy::MtlTagger* m = model.mtl();
      std::vector<hierarchy::MtlLabels> labels;
      for (int c : train_labels) labels.push_back(m->labels_of(model.leaf_of_class(c)));
      const hierarchy::MtlWeights w = cfg.mtl;
      flat = std::make_unique<numerics::MinibatchTrainer>(
          *model.parameter_sets().front(), tp.size(),
          [m, &tp, labels = std::move(labels), w](Graph& g, std::size_t i) {
            return hierarchy::mtl_loss(m->forward(g, tp[i]), labels[i], m->theme_to_subtheme(), m->subtheme_to_poi(),
                                       w);
          },
          opts, "mtl");
      break;
    }
    case Variant::hier:
      for (int c : train_labels) leaves.push_back(model.leaf_of_class(c));
      hier = std::make_unique<hierarchy::LcpnTrainer>(*model.lcpn(), tp, leaves, opts);
      h.warnings = hier->warnings();
      break;
  }

  for (int e = 1; e <= cfg.epochs; ++e) {
    const numerics::EpochResult r = flat ? flat->run_epoch() : hier->run_epoch();
    if (e == 1) h.initial_loss = r.first_batch_loss;
    EpochRecord rec{e, r.mean_loss, val_accuracy(model, vp, val_labels)};
    h.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return h;
}

TrainResult train(const RunConfig& cfg, const std::vector<data::Poi>& pois, const std::vector<data::Post>& train,
                  const std::vector<data::Post>& val, const EpochCallback& on_epoch) {
  TrainResult r{GeoModel::create(cfg, pois, train), {}};
  r.history = fit(r.model, train, val, on_epoch);
  return r;
}

}  // namespace geotag::app
