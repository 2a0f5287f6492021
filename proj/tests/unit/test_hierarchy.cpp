// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "geotag/hierarchy/lcpn.hpp"
#include "geotag/hierarchy/mtl.hpp"
#include "geotag/numerics/optim.hpp"

using namespace geotag;
using namespace geotag::hierarchy;
using numerics::Graph;
using numerics::ParameterSet;
using numerics::Tensor;
using numerics::Var;

namespace {

data::Poi poi(const std::string& id, const std::string& theme, const std::string& sub) {
  return {id, "name " + id, theme, sub, -37.8, 144.9};
}

std::vector<data::Poi> large_fixture() {
  std::vector<data::Poi> out;
  for (int i = 0; i < 242; ++i) {
    const int sub = i % 49;
    out.push_back(poi("p" + std::to_string(i), "t" + std::to_string(sub % 16), "s" + std::to_string(sub)));
  }
  return out;
}

data::Post make_post(const std::string& text, const std::string& ts) {
  data::Post p;
  p.id = text;
  p.fields = {{"text", text}, {"user_location", "carlton"}, {"user_description", "hi"}, {"source", "web"},
              {"created_at", ts}};
  return p;
}

fusion::ModelSpec tiny_spec() {
  fusion::ModelSpec s;
  s.schema.ct_mode = fusion::CtMode::onehot;
  s.schema.time_mode = fusion::TimeMode::onehot;
  s.encoder.layers = 1;
  s.encoder.heads = 2;
  s.encoder.hidden = 8;
  s.encoder.ff = 16;
  s.encoder.dropout = 0.0;
  s.encoder.max_len = 16;
  s.fusion.layers = 1;
  s.fusion.heads = 2;
  s.fusion.width = 8;
  s.fusion.ff = 16;
  s.fusion.dropout = 0.0;
  std::vector<data::Post> posts = {make_post("alpha beta", "2019-01-01T10:00:00Z"),
                                   make_post("gamma delta", "2019-06-01T22:00:00Z")};
  s.vocab = std::make_shared<textenc::Vocab>(fusion::build_feature_vocab(posts, s.schema, 100));
  s.categories = fusion::build_category_vocabs(posts, s.schema);
  return s;
}

/// Sets a local classifier to output fixed probabilities regardless of input.
void pin(LcpnModel& m, int node, const std::vector<double>& probs) {
  for (auto& lc : m.locals())
    if (lc.node == node) {
      auto& ps = *lc.params;
      const std::string pre = "node" + std::to_string(node) + ".head.";
      ps.get(pre + "w").value.fill(0.0);
      auto& b = ps.get(pre + "b").value;
      for (std::size_t i = 0; i < probs.size(); ++i) b[i] = std::log(probs[i]);
      return;
    }
  FAIL("no classifier at node");
}

}  // namespace

TEST_CASE("build_tree examples") {
  PoiTree t({poi("a", "x", "s1"), poi("b", "x", "s1"), poi("c", "y", "s2"), poi("d", "y", "s3")},
            {Level::theme, Level::poi});
  CHECK(t.size() == 7);
  CHECK(t.node(0).id == "root");
  CHECK(t.level_nodes(Level::theme).size() == 2);
  for (int leaf : t.level_nodes(Level::poi)) CHECK(t.path(leaf).size() == 2);
  CHECK(t.node(t.ancestor(t.leaf("c"), Level::theme)).name == "y");

  PoiTree full({poi("a", "x", "s1"), poi("b", "x", "s1"), poi("c", "y", "s2"), poi("d", "y", "s3")},
               {Level::theme, Level::subtheme, Level::poi});
  for (int leaf : full.level_nodes(Level::poi)) CHECK(full.path(leaf).size() == 3);
  CHECK(full.level_nodes(Level::subtheme).size() == 3);

  CHECK_THROWS_AS(PoiTree({poi("a", "x", "s"), poi("a", "y", "s")}, {Level::theme, Level::poi}),
                  std::invalid_argument);
  CHECK_THROWS_AS(PoiTree({poi("a", "", "s")}, {Level::theme, Level::poi}), std::invalid_argument);
  CHECK_THROWS_AS(PoiTree({poi("a", "x", "s")}, {Level::poi, Level::theme}), std::invalid_argument);
  CHECK_THROWS_AS(PoiTree({poi("a", "x", "s")}, {Level::theme}), std::invalid_argument);
}

TEST_CASE("children are ordered lexicographically") {
  PoiTree t({poi("z", "b", "s"), poi("m", "a", "s"), poi("a", "b", "s")}, {Level::theme, Level::poi});
  std::vector<std::string> names;
  for (int n : t.level_nodes(Level::poi)) names.push_back(t.node(n).id);
  CHECK(names == std::vector<std::string>{"m", "a", "z"});
}

TEST_CASE("242-POI fixture has 16/49/242 levels") {
  PoiTree t(large_fixture(), {Level::theme, Level::subtheme, Level::poi});
  CHECK(t.level_nodes(Level::theme).size() == 16);
  CHECK(t.level_nodes(Level::subtheme).size() == 49);
  CHECK(t.level_nodes(Level::poi).size() == 242);
  CHECK(t.size() == 1 + 16 + 49 + 242);
}

TEST_CASE("tree json round trip") {
  PoiTree t(large_fixture(), {Level::theme, Level::subtheme, Level::poi});
  nlohmann::json j = t;
  PoiTree back = j.get<PoiTree>();
  CHECK(back == t);
  CHECK(back.leaf("p17") == t.leaf("p17"));
  CHECK(back.class_index(back.leaf("p17")) == t.class_index(t.leaf("p17")));
}

TEST_CASE("correlation matrix examples") {
  PoiTree t({poi("p1", "a", "s"), poi("p2", "a", "s"), poi("p3", "b", "s"), poi("p4", "b", "s"), poi("p5", "b", "s")},
            {Level::theme, Level::poi});
  Tensor m = correlation_matrix(t, Level::theme, Level::poi);
  CHECK(m.shape() == numerics::Shape{2, 5});
  CHECK(std::vector<double>(m.row(0).begin(), m.row(0).end()) == std::vector<double>{0.5, 0.5, 0, 0, 0});
  CHECK_THROWS(correlation_matrix(t, Level::poi, Level::theme));
  CHECK_THROWS(correlation_matrix(t, Level::subtheme, Level::poi));

  PoiTree big(large_fixture(), {Level::theme, Level::subtheme, Level::poi});
  std::mt19937_64 rng(1);
  for (auto [c, f] : {std::pair{Level::theme, Level::subtheme}, std::pair{Level::subtheme, Level::poi},
                      std::pair{Level::theme, Level::poi}}) {
    Tensor mm = correlation_matrix(big, c, f);
    for (std::size_t r = 0; r < mm.rows(); ++r) {
      double s = 0.0;
      for (double v : mm.row(r)) {
        CHECK(v >= 0.0);
        s += v;
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
    for (std::size_t col = 0; col < mm.cols(); ++col) {
      int nonzero = 0;
      for (std::size_t r = 0; r < mm.rows(); ++r) nonzero += mm.at(r, col) != 0.0;
      CHECK(nonzero == 1);
    }
    std::vector<double> q(mm.rows());
    double z = 0.0;
    for (auto& v : q) z += (v = std::uniform_real_distribution<double>(0, 1)(rng));
    for (auto& v : q) v /= z;
    double total = 0.0;
    for (std::size_t col = 0; col < mm.cols(); ++col) {
      double v = 0.0;
      for (std::size_t r = 0; r < mm.rows(); ++r) v += q[r] * mm.at(r, col);
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("lcpn builds one classifier per branching parent") {
  PoiTree t({poi("a1", "A", "s"), poi("a2", "A", "s"), poi("b1", "B", "s"), poi("b2", "B", "s"), poi("b3", "B", "s"),
             poi("c1", "C", "s"), poi("c2", "C", "s"), poi("d1", "D", "s")},
            {Level::theme, Level::poi});
  LcpnModel m(t, tiny_spec(), 3);
  CHECK(m.locals().size() == 4);
  CHECK(m.local(0) != nullptr);
  CHECK(m.local(0)->tagger->classes() == 4);
  const int d = m.tree().ancestor(m.tree().leaf("d1"), Level::theme);
  CHECK(m.local(d) == nullptr);

  std::vector<fusion::PreparedPost> posts;
  std::vector<int> leaves;
  const auto post = m.prepare(make_post("alpha", "2019-01-01T10:00:00Z"));
  for (const char* id : {"a1", "b2", "b3", "c1", "a2", "b1", "d1"}) {
    posts.push_back(post);
    leaves.push_back(m.tree().leaf(id));
  }
  LcpnTrainer trainer(m, posts, leaves, {});
  CHECK(trainer.examples_for(0).size() == 7);
  const int b = m.tree().ancestor(m.tree().leaf("b1"), Level::theme);
  CHECK(trainer.examples_for(b) == std::vector<std::size_t>{1, 2, 5});
  const int a = m.tree().ancestor(m.tree().leaf("a1"), Level::theme);
  for (std::size_t i : trainer.examples_for(a)) CHECK(m.tree().ancestor(leaves[i], Level::theme) == a);
  CHECK(trainer.warnings().empty());
  trainer.run_epoch();
}

TEST_CASE("lcpn untrained parents fall back to a uniform prior") {
  PoiTree t({poi("a1", "A", "s"), poi("a2", "A", "s"), poi("b1", "B", "s"), poi("b2", "B", "s")},
            {Level::theme, Level::poi});
  LcpnModel m(t, tiny_spec(), 3);
  const auto post = m.prepare(make_post("alpha", "2019-01-01T10:00:00Z"));
  std::vector<fusion::PreparedPost> posts = {post};
  std::vector<int> leaves = {m.tree().leaf("a1")};
  LcpnTrainer trainer(m, posts, leaves, {});
  REQUIRE(trainer.warnings().size() == 1);
  const int b = m.tree().ancestor(m.tree().leaf("b1"), Level::theme);
  CHECK(m.conditional(b, post) == std::vector<double>{0.5, 0.5});
}

TEST_CASE("lcpn_predict examples") {
  PoiTree t({poi("a1", "A", "s"), poi("a2", "A", "s"), poi("b1", "B", "s"), poi("b2", "B", "s")},
            {Level::theme, Level::poi});
  LcpnModel m(t, tiny_spec(), 5);
  const int a = m.tree().ancestor(m.tree().leaf("a1"), Level::theme);
  const int b = m.tree().ancestor(m.tree().leaf("b1"), Level::theme);
  pin(m, 0, {0.9, 0.1});
  pin(m, a, {0.7, 0.3});
  pin(m, b, {0.6, 0.4});
  const auto post = m.prepare(make_post("alpha", "2019-01-01T10:00:00Z"));

  auto p = m.predict(post);
  REQUIRE(p.ranking.size() == 4);
  CHECK(p.ranking[0] == m.tree().leaf("a1"));
  CHECK(p.scores[0] == doctest::Approx(0.63).epsilon(1e-12));
  CHECK(p.scores[1] == doctest::Approx(0.27).epsilon(1e-12));
  CHECK(p.scores[2] == doctest::Approx(0.06).epsilon(1e-12));
  CHECK(p.scores[3] == doctest::Approx(0.04).epsilon(1e-12));

  m.set_theta(0.5);
  p = m.predict(post);
  CHECK(p.ranking[0] == m.tree().leaf("a1"));
  CHECK(p.ranking[1] == m.tree().leaf("a2"));
  CHECK(p.scores[1] == 0.0);
  CHECK(p.scores[2] == 0.0);
  CHECK(p.scores[3] == 0.0);
  CHECK(p.ranking[2] == m.tree().leaf("b1"));
  CHECK(p.ranking[3] == m.tree().leaf("b2"));
  CHECK(std::find(p.expanded.begin(), p.expanded.end(), b) == p.expanded.end());

  pin(m, 0, {0.45, 0.55});
  m.set_theta(0.9);
  p = m.predict(post);
  CHECK(p.ranking[0] == m.tree().leaf("b1"));
  CHECK(p.scores[0] == doctest::Approx(0.55 * 0.6).epsilon(1e-12));
  CHECK(p.expanded == std::vector<int>{0, b});
}

TEST_CASE("lcpn path consistency and score mass") {
  PoiTree t(large_fixture(), {Level::theme, Level::poi});
  auto spec = tiny_spec();
  LcpnModel m(t, spec, 9);
  for (auto& lc : m.locals())
    for (auto& p : *lc.params)
      for (double& v : p.value.storage()) v *= 8.0;
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const auto post = m.prepare(make_post(trial % 2 ? "alpha beta" : "gamma", "2019-0" + std::to_string(trial + 1) +
                                                                                  "-01T1" + std::to_string(trial) +
                                                                                  ":00:00Z"));
    for (double theta : {0.0, 0.01, 0.05}) {
      m.set_theta(theta);
      auto p = m.predict(post);
      CHECK(p.ranking.size() == 242);
      CHECK(std::set<int>(p.ranking.begin(), p.ranking.end()).size() == 242);
      const double total = std::accumulate(p.scores.begin(), p.scores.end(), 0.0);
      CHECK(total <= 1.0 + 1e-12);
      if (theta == 0.0) CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(std::is_sorted(p.scores.begin(), p.scores.end(), std::greater<>()));
      CHECK(p.scores[0] > 0.0);
      double product = 1.0;
      int parent = 0;
      for (int n : m.tree().path(p.ranking[0])) {
        CHECK(std::find(p.expanded.begin(), p.expanded.end(), parent) != p.expanded.end());
        const auto& ch = m.tree().node(parent).children;
        const auto c = static_cast<std::size_t>(std::find(ch.begin(), ch.end(), n) - ch.begin());
        product *= m.conditional(parent, post)[c];
        parent = n;
      }
      CHECK(p.scores[0] == doctest::Approx(product).epsilon(1e-12));
    }
  }
}

TEST_CASE("mtl forward shapes and shared backbone") {
  PoiTree t(large_fixture(), {Level::theme, Level::subtheme, Level::poi});
  ParameterSet ps;
  std::mt19937_64 rng(4);
  MtlTagger m(ps, t, tiny_spec(), rng);
  const auto post = m.prepare(make_post("alpha", "2019-01-01T10:00:00Z"));
  Graph g;
  auto out = m.forward(g, post);
  CHECK(out.theme.value().cols() == 16);
  CHECK(out.subtheme.value().cols() == 49);
  CHECK(out.poi.value().cols() == 242);
  for (Var v : {out.theme, out.subtheme, out.poi}) {
    double s = 0.0;
    for (double x : numerics::softmax(v).value().storage()) s += x;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
  }

  const Tensor before_t = numerics::softmax(out.theme).value();
  const Tensor before_s = numerics::softmax(out.subtheme).value();
  const Tensor before_p = numerics::softmax(out.poi).value();
  ps.get("fusion.layer0.ff.w1").value[3] += 0.5;
  Graph g2;
  auto out2 = m.forward(g2, post);
  auto changed = [](const Tensor& a, const Tensor& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i] != b[i]) return true;
    return false;
  };
  CHECK(changed(before_t, numerics::softmax(out2.theme).value()));
  CHECK(changed(before_s, numerics::softmax(out2.subtheme).value()));
  CHECK(changed(before_p, numerics::softmax(out2.poi).value()));

  const auto lab = m.labels_of(t.leaf("p60"));
  CHECK(lab.poi == t.class_index(t.leaf("p60")));
  CHECK(t.node(t.level_nodes(Level::subtheme)[static_cast<std::size_t>(lab.subtheme)]).name == "s11");
  CHECK(t.node(t.level_nodes(Level::theme)[static_cast<std::size_t>(lab.theme)]).name == "t11");

  PoiTree two(large_fixture(), {Level::theme, Level::poi});
  ParameterSet ps2;
  CHECK_THROWS_AS(MtlTagger(ps2, two, tiny_spec(), rng), std::invalid_argument);
}

TEST_CASE("mtl_loss matches a hand-rolled scalar computation") {
  // Themes T0 {S0, S1}, T1 {S2}; S0 {P0}, S1 {P1, P2}, S2 {P3}.
  PoiTree t({poi("P0", "T0", "S0"), poi("P1", "T0", "S1"), poi("P2", "T0", "S1"), poi("P3", "T1", "S2")},
            {Level::theme, Level::subtheme, Level::poi});
  const std::vector<std::vector<double>> mts = {{0.5, 0.5, 0.0}, {0.0, 0.0, 1.0}};
  const std::vector<std::vector<double>> msp = {{1, 0, 0, 0}, {0, 0.5, 0.5, 0}, {0, 0, 0, 1}};
  const Tensor m_ts = correlation_matrix(t, Level::theme, Level::subtheme);
  const Tensor m_sp = correlation_matrix(t, Level::subtheme, Level::poi);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 3; ++c) CHECK(m_ts.at(r, c) == mts[r][c]);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) CHECK(m_sp.at(r, c) == msp[r][c]);

  const std::vector<double> qt = {0.7, 0.3}, qs = {0.2, 0.5, 0.3}, pp = {0.1, 0.4, 0.3, 0.2};
  const MtlLabels y{0, 1, 2};
  const MtlWeights w;

  double want = -w.theme * std::log(qt[0]) - w.subtheme * std::log(qs[1]) - w.poi * std::log(pp[2]);
  double x1 = 0.0, x2 = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    double a = 0.0;
    for (std::size_t i = 0; i < 2; ++i) a += qt[i] * mts[i][j];
    x1 -= a * std::log(qs[j]);
  }
  for (std::size_t j = 0; j < 4; ++j) {
    double a = 0.0;
    for (std::size_t i = 0; i < 3; ++i) a += qs[i] * msp[i][j];
    x2 -= a * std::log(pp[j]);
  }
  want += w.lambda_c * (x1 + x2);

  auto logits = [](Graph& g, const std::vector<double>& p) {
    std::vector<double> l;
    for (double v : p) l.push_back(std::log(v));
    return g.variable(Tensor({1, p.size()}, l));
  };
  Graph g;
  MtlOutput out{logits(g, qt), logits(g, qs), logits(g, pp)};
  CHECK(std::abs(mtl_loss(out, y, m_ts, m_sp, w).value()[0] - want) <= 1e-10);

  MtlWeights doubled{0.2, 0.2, 2.0, 0.2};
  CHECK(mtl_loss(out, y, m_ts, m_sp, doubled).value()[0] ==
        doctest::Approx(2.0 * mtl_loss(out, y, m_ts, m_sp, w).value()[0]).epsilon(1e-13));

  CHECK_THROWS_AS(mtl_loss(out, MtlLabels{2, 0, 0}, m_ts, m_sp, w), std::out_of_range);
  CHECK_THROWS_AS(mtl_loss(out, MtlLabels{0, 0, 4}, m_ts, m_sp, w), std::out_of_range);
}

TEST_CASE("mtl_loss is zero for perfect predictions without the constraint") {
  PoiTree t({poi("P0", "T0", "S0"), poi("P1", "T0", "S1"), poi("P2", "T0", "S1"), poi("P3", "T1", "S2")},
            {Level::theme, Level::subtheme, Level::poi});
  const Tensor m_ts = correlation_matrix(t, Level::theme, Level::subtheme);
  const Tensor m_sp = correlation_matrix(t, Level::subtheme, Level::poi);
  auto one_hot = [](Graph& g, std::size_t n, std::size_t k) {
    Tensor l({1, n}, -1e4);
    l[k] = 0.0;
    return g.constant(l);
  };
  Graph g;
  MtlOutput out{one_hot(g, 2, 1), one_hot(g, 3, 2), one_hot(g, 4, 3)};
  MtlWeights w;
  w.lambda_c = 0.0;
  CHECK(mtl_loss(out, MtlLabels{1, 2, 3}, m_ts, m_sp, w).value()[0] == 0.0);
  w.lambda_c = 0.1;
  CHECK(mtl_loss(out, MtlLabels{1, 2, 3}, m_ts, m_sp, w).value()[0] >= 0.0);
}

TEST_CASE("mtl_loss gradients") {
  PoiTree t({poi("P0", "T0", "S0"), poi("P1", "T0", "S1"), poi("P2", "T0", "S1"), poi("P3", "T1", "S2")},
            {Level::theme, Level::subtheme, Level::poi});
  ParameterSet ps;
  std::mt19937_64 rng(6);
  auto& a = ps.add("a", Tensor::uniform({1, 2}, -1, 1, rng));
  auto& b = ps.add("b", Tensor::uniform({1, 3}, -1, 1, rng));
  auto& c = ps.add("c", Tensor::uniform({1, 4}, -1, 1, rng));
  const Tensor m_ts = correlation_matrix(t, Level::theme, Level::subtheme);
  const Tensor m_sp = correlation_matrix(t, Level::subtheme, Level::poi);
  auto build = [&](Graph& g) {
    return mtl_loss({g.param(a), g.param(b), g.param(c)}, MtlLabels{1, 2, 3}, m_ts, m_sp);
  };
  CHECK(numerics::grad_check(ps, build) <= 1e-6);
}
