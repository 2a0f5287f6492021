// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include "geotag/app/grid.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <stdexcept>

namespace geotag::app {

using fusion::CtMode;
using fusion::TimeMode;

namespace {

constexpr std::array kCtModes = {CtMode::text, CtMode::onehot};
constexpr std::array kTimeModes = {TimeMode::text, TimeMode::onehot, TimeMode::unihier};
constexpr std::array kAblations = {Ablation::full, Ablation::no_transformer, Ablation::no_position};

std::string mode_label(CtMode m) { return m == CtMode::text ? "Text" : "1Hot"; }

std::string mode_label(TimeMode m) {
  switch (m) {
    case TimeMode::text: return "Text";
    case TimeMode::onehot: return "1Hot";
    case TimeMode::unihier: return "UniHier";
  }
  return "?";
}

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::full: return "full";
    case Ablation::no_transformer: return "w/o transformer";
    case Ablation::no_position: return "w/o position";
  }
  return "?";
}

std::string combination_name(CtMode ct, TimeMode time) { return mode_label(ct) + "-" + mode_label(time); }

RunConfig cell_config(const RunConfig& base, CtMode ct, TimeMode time, Ablation a) {
  RunConfig c = base;
  c.schema.ct_mode = ct;
  c.schema.time_mode = time;
  if (a == Ablation::no_transformer) c.fusion.use_encoder = false;
  if (a == Ablation::no_position) c.fusion.position = fusion::PositionMode::add;
  std::size_t ai = 0, ti = 0;
  while (kAblations[ai] != a) ++ai;
  while (kTimeModes[ti] != time) ++ti;
  c.seed = base.seed + ai * kTimeModes.size() + ti;
  return c;
}

const GridCell& GridReport::at(CtMode ct, TimeMode time, Ablation a) const {
  for (const auto& c : cells)
    if (c.ct == ct && c.time == time && c.ablation == a) return c;
  throw std::out_of_range("grid has no cell " + combination_name(ct, time) + " / " + to_string(a));
}

void GridReport::write_text(std::ostream& out) const {
  const std::vector<std::string> head = {"ablation", "combination", "val@1", "acc@1", "acc@5",
                                         "acc@10",   "acc@20",      "mean_m", "median_m"};
  std::vector<std::vector<std::string>> rows = {head};
  for (const auto& c : cells) {
    std::vector<std::string> r = {to_string(c.ablation), combination_name(c.ct, c.time)};
    if (c.ok) {
      for (double v : {c.val_acc1, c.metrics.acc1, c.metrics.acc5, c.metrics.acc10, c.metrics.acc20})
        r.push_back(fmt(100.0 * v, 2));
      r.push_back(fmt(c.metrics.mean_distance_m, 1));
      r.push_back(fmt(c.metrics.median_distance_m, 1));
    }
    rows.push_back(std::move(r));
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& r : rows)
    for (std::size_t k = 0; k < r.size(); ++k) width[k] = std::max(width[k], r[k].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    for (std::size_t k = 0; k < r.size(); ++k) {
      const std::string pad(width[k] - r[k].size(), ' ');
      if (k > 0) out << "  ";
      out << (k < 2 ? r[k] + pad : pad + r[k]);
    }
    if (i > 0 && !cells[i - 1].ok) out << "  failed: " << cells[i - 1].error;
    out << '\n';
  }
}

void GridReport::write_csv(std::ostream& out) const {
  out << "ablation,combination,status,seed,val_acc1,acc1,acc5,acc10,acc20,mean_m,median_m,n\n";
  for (const auto& c : cells) {
    out << to_string(c.ablation) << ',' << combination_name(c.ct, c.time) << ',';
    if (!c.ok) {
      std::string e = c.error;
      for (char& ch : e)
        if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
      out << "failed: " << e << ',' << c.seed << ",,,,,,,,\n";
      continue;
    }
    const auto& m = c.metrics;
    out << "ok," << c.seed << ',' << fmt(c.val_acc1, 6) << ',' << fmt(m.acc1, 6) << ',' << fmt(m.acc5, 6) << ','
        << fmt(m.acc10, 6) << ',' << fmt(m.acc20, 6) << ',' << fmt(m.mean_distance_m, 3) << ','
        << fmt(m.median_distance_m, 3) << ',' << m.n_examples << '\n';
  }
}

GridReport run_grid(const RunConfig& base, const GridData& data, const std::function<void(const GridCell&)>& on_cell) {
  GridReport report;
  const auto& eval_set = data.test.empty() ? data.val : data.test;
  for (Ablation a : kAblations)
    for (CtMode ct : kCtModes)
      for (TimeMode t : kTimeModes) {
        GridCell cell;
        cell.ct = ct;
        cell.time = t;
        cell.ablation = a;
        try {
          const RunConfig cfg = cell_config(base, ct, t, a);
          cell.seed = cfg.seed;
          auto run = train(cfg, data.pois, data.train, data.val);
          cell.val_acc1 = run.history.epochs.empty() ? evaluate(run.model, data.val).acc1
                                                     : run.history.epochs.back().val_acc1;
          cell.metrics = evaluate(run.model, eval_set);
          cell.ok = true;
        } catch (const std::exception& e) {
          cell.error = e.what();
        }
        if (on_cell) on_cell(cell);
        report.cells.push_back(std::move(cell));
      }
  return report;
}

}  // namespace geotag::app
