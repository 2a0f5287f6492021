// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>

#include "CLI11.hpp"
#include "geotag/app/checkpoint.hpp"
#include "geotag/app/grid.hpp"
#include "geotag/data/geo.hpp"
#include "geotag/data/synth.hpp"
#include "json.hpp"

namespace geotag::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  std::string posts;
  std::string pois;
  std::string checkpoint;
  std::string data;
  std::vector<double> ratios = {0.8, 0.1, 0.1};
};

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

void print_metrics(std::ostream& out, const data::MetricsReport& m) {
  out << "n=" << m.n_examples << "  acc@1=" << pct(m.acc1) << "  acc@5=" << pct(m.acc5) << "  acc@10=" << pct(m.acc10)
      << "  acc@20=" << pct(m.acc20) << "  mean_m=" << m.mean_distance_m << "  median_m=" << m.median_distance_m
      << '\n';
}

json metrics_json(const data::MetricsReport& m) {
  return {{"n", m.n_examples},       {"acc1", m.acc1},
          {"acc5", m.acc5},          {"acc10", m.acc10},
          {"acc20", m.acc20},        {"mean_distance_m", m.mean_distance_m},
          {"median_distance_m", m.median_distance_m}};
}

void write_text(const fs::path& path, const std::string& s) {
  std::ofstream f(path);
  f << s;
  if (!f) throw std::runtime_error("cannot write " + path.string());
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
}

int gen_synth(const Options& o, std::ostream& out) {
  data::SynthConfig cfg;
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw std::runtime_error("cannot open " + o.config);
    cfg = json::parse(in).get<data::SynthConfig>();
  }
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();
  const auto synth = data::gen_synthetic(cfg);
  const fs::path dir = o.out;
  make_dir(dir);
  data::save_posts(dir / "posts.jsonl", synth.posts);
  data::save_pois(dir / "pois.json", synth.pois);
  write_text(dir / "synth.json", json(cfg).dump(2) + "\n");
  out << "wrote " << synth.posts.size() << " posts and " << synth.pois.size() << " POIs to " << dir.string() << '\n';
  return kExitOk;
}

int prepare(const Options& o, std::ostream& out) {
  if (o.ratios.size() != 3) throw std::invalid_argument("--split needs three ratios");
  const auto posts = data::load_posts(o.posts);
  const auto pois = data::load_pois(o.pois);
  const auto labeled = data::label_posts(posts, pois);
  const auto sets = data::split(labeled, {o.ratios[0], o.ratios[1], o.ratios[2]}, o.seed.value_or(7));
  const fs::path dir = o.out;
  make_dir(dir);
  data::save_posts(dir / "train.jsonl", sets.train);
  data::save_posts(dir / "val.jsonl", sets.val);
  data::save_posts(dir / "test.jsonl", sets.test);
  data::save_pois(dir / "pois.json", pois);
  app::RunConfig run;
  run.data = {"train.jsonl", "val.jsonl", "test.jsonl", "pois.json"};
  run.output = "run";
  if (o.seed) run.seed = *o.seed;
  write_text(dir / "run.json", json(run).dump(2) + "\n");
  out << "labeled " << labeled.size() << " of " << posts.size() << " posts (" << posts.size() - labeled.size()
      << " farther than 100 m from every POI)\n"
      << "split " << sets.train.size() << " / " << sets.val.size() << " / " << sets.test.size() << " into "
      << dir.string() << '\n';
  return kExitOk;
}

app::RunConfig load_config(const Options& o) {
  app::RunConfig cfg = app::load_run_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.output = o.out;
  if (cfg.data.train.empty() || cfg.data.pois.empty())
    throw std::invalid_argument("config needs data.train and data.pois");
  return cfg;
}

std::vector<data::Post> load_optional(const fs::path& p) {
  return p.empty() ? std::vector<data::Post>{} : data::load_posts(p);
}

int train(const Options& o, std::ostream& out) {
  const app::RunConfig cfg = load_config(o);
  const auto pois = data::load_pois(cfg.data.pois);
  const auto train_posts = data::load_posts(cfg.data.train);
  const auto val = load_optional(cfg.data.val);
  const auto test = load_optional(cfg.data.test);
  out << "training " << app::to_string(cfg.variant) << " on " << train_posts.size() << " posts, " << pois.size()
      << " POIs, " << cfg.epochs << " epochs\n";
  auto run = app::train(cfg, pois, train_posts, val, [&out](const app::EpochRecord& e) {
    out << "epoch " << e.epoch << "  loss " << e.train_loss << "  val acc@1 " << pct(e.val_acc1) << std::endl;
  });
  for (const auto& w : run.history.warnings) out << "warning: " << w << '\n';
  make_dir(cfg.output);
  app::save_checkpoint(run.model, cfg.output / "checkpoint");
  app::save_history_csv(cfg.output / "history.csv", run.history);
  json summary = {{"initial_loss", run.history.initial_loss ? json(*run.history.initial_loss) : json(nullptr)}};
  if (!val.empty()) summary["val"] = metrics_json(app::evaluate(run.model, val));
  if (!test.empty()) {
    const auto m = app::evaluate(run.model, test);
    summary["test"] = metrics_json(m);
    out << "test: ";
    print_metrics(out, m);
  }
  write_text(cfg.output / "metrics.json", summary.dump(2) + "\n");
  out << "checkpoint written to " << (cfg.output / "checkpoint").string() << '\n';
  return kExitOk;
}

int eval(const Options& o, std::ostream& out) {
  const auto model = app::load_checkpoint(o.checkpoint);
  const auto posts = data::load_posts(o.data);
  print_metrics(out, app::evaluate(model, posts));
  return kExitOk;
}

int grid(const Options& o, std::ostream& out) {
  const app::RunConfig cfg = load_config(o);
  app::GridData d{data::load_pois(cfg.data.pois), data::load_posts(cfg.data.train), load_optional(cfg.data.val),
                  load_optional(cfg.data.test)};
  const auto report = app::run_grid(cfg, d, [&out](const app::GridCell& c) {
    out << app::to_string(c.ablation) << " / " << app::combination_name(c.ct, c.time) << ": "
        << (c.ok ? "val acc@1 " + pct(c.val_acc1) : "failed: " + c.error) << std::endl;
  });
  make_dir(cfg.output);
  std::ofstream txt(cfg.output / "grid.txt"), csv(cfg.output / "grid.csv");
  report.write_text(txt);
  report.write_csv(csv);
  if (!txt || !csv) throw std::runtime_error("cannot write grid tables to " + cfg.output.string());
  report.write_text(out);
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"POI tagging of geo-located posts", "geotag"};
  app.require_subcommand(1);
  Options o;
  auto seed = [&o](CLI::App* sub) {
    sub->add_option_function<std::uint64_t>("--seed", [&o](const std::uint64_t& s) { o.seed = s; },
                                            "Seed for all randomness");
  };

  auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic POI corpus");
  gen->add_option("--config", o.config, "Synthetic corpus config (JSON)");
  gen->add_option("--out", o.out, "Output directory")->required();
  seed(gen);

  auto* prep = app.add_subcommand("prepare", "Label posts by nearest POI and split them");
  prep->add_option("--posts", o.posts, "Posts (JSON lines)")->required();
  prep->add_option("--pois", o.pois, "POIs (JSON)")->required();
  prep->add_option("--out", o.out, "Output directory")->required();
  prep->add_option("--split", o.ratios, "Train, validation and test ratios")->expected(3);
  seed(prep);

  auto* tr = app.add_subcommand("train", "Train a tagger");
  tr->add_option("--config", o.config, "Run config (JSON)")->required();
  tr->add_option("--out", o.out, "Output directory (overrides the config)");
  seed(tr);

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--checkpoint", o.checkpoint, "Checkpoint directory")->required();
  ev->add_option("--data", o.data, "Labeled posts (JSON lines)")->required();

  auto* gr = app.add_subcommand("grid", "Run the representation and ablation grid");
  gr->add_option("--config", o.config, "Run config (JSON)")->required();
  gr->add_option("--out", o.out, "Output directory (overrides the config)");
  seed(gr);

  if (argc <= 1) {
    err << app.help();
    return kExitUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return gen_synth(o, out);
    if (prep->parsed()) return prepare(o, out);
    if (tr->parsed()) return train(o, out);
    if (ev->parsed()) return eval(o, out);
    return grid(o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace geotag::cli
