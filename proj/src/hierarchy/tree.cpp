// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include "geotag/hierarchy/tree.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>

namespace geotag::hierarchy {

std::string to_string(Level l) {
  switch (l) {
    case Level::theme: return "theme";
    case Level::subtheme: return "subtheme";
    case Level::poi: return "poi";
  }
  return "?";
}

Level parse_level(std::string_view s) {
  if (s == "theme") return Level::theme;
  if (s == "subtheme") return Level::subtheme;
  if (s == "poi") return Level::poi;
  throw std::invalid_argument("unknown level '" + std::string(s) + "' (expected theme|subtheme|poi)");
}

PoiTree::PoiTree(const std::vector<data::Poi>& pois, const std::vector<Level>& levels) : levels_(levels) {
  if (levels.empty() || levels.back() != Level::poi)
    throw std::invalid_argument("tree levels must end with poi");
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (static_cast<int>(levels[i]) <= static_cast<int>(levels[i - 1]))
      throw std::invalid_argument("tree levels must be strictly ordered theme, subtheme, poi");

  // Nested map keyed by node id at each level; std::map gives lexicographic order.
  struct Draft {
    std::string name;
    const data::Poi* poi = nullptr;
    std::map<std::string, Draft> children;
  };
  Draft root;
  root.name = "root";
  std::set<std::string> seen;
  for (const auto& p : pois) {
    if (p.id.empty()) throw std::invalid_argument("POI with empty id");
    if (!seen.insert(p.id).second) throw std::invalid_argument("duplicate POI id " + p.id);
    Draft* cur = &root;
    for (Level l : levels) {
      std::string key;
      std::string name;
      if (l == Level::theme) {
        if (p.theme.empty()) throw std::invalid_argument("POI " + p.id + " has an empty theme");
        key = "theme:" + p.theme;
        name = p.theme;
      } else if (l == Level::subtheme) {
        if (p.subtheme.empty()) throw std::invalid_argument("POI " + p.id + " has an empty subtheme");
        key = "subtheme:" + p.theme + "/" + p.subtheme;
        name = p.subtheme;
      } else {
        key = p.id;
        name = p.name;
      }
      Draft& next = cur->children[key];
      next.name = name;
      if (l == Level::poi) next.poi = &p;
      cur = &next;
    }
  }

  std::function<int(const std::string&, const Draft&, int, int)> emit = [&](const std::string& id, const Draft& d,
                                                                            int depth, int parent) {
    const int me = static_cast<int>(nodes_.size());
    TreeNode n;
    n.id = id;
    n.name = d.name;
    n.depth = depth;
    n.parent = parent;
    if (d.poi) {
      n.lat = d.poi->lat;
      n.lon = d.poi->lon;
    }
    nodes_.push_back(std::move(n));
    for (const auto& [cid, child] : d.children) {
      const int c = emit(cid, child, depth + 1, me);
      nodes_[static_cast<std::size_t>(me)].children.push_back(c);
    }
    return me;
  };
  emit("root", root, -1, -1);
  index();
}

void PoiTree::index() {
  by_level_.assign(levels_.size(), {});
  class_index_.assign(nodes_.size(), -1);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const int d = nodes_[i].depth;
    if (d < 0) continue;
    auto& list = by_level_.at(static_cast<std::size_t>(d));
    class_index_[i] = static_cast<int>(list.size());
    list.push_back(static_cast<int>(i));
  }
}

int PoiTree::depth_of(Level level) const {
  auto it = std::find(levels_.begin(), levels_.end(), level);
  if (it == levels_.end()) throw std::invalid_argument("tree has no " + to_string(level) + " level");
  return static_cast<int>(it - levels_.begin());
}

bool PoiTree::has_level(Level level) const {
  return std::find(levels_.begin(), levels_.end(), level) != levels_.end();
}

const std::vector<int>& PoiTree::level_nodes(Level level) const {
  return by_level_.at(static_cast<std::size_t>(depth_of(level)));
}

int PoiTree::leaf(std::string_view poi_id) const {
  for (int n : level_nodes(Level::poi))
    if (nodes_[static_cast<std::size_t>(n)].id == poi_id) return n;
  throw std::out_of_range("POI " + std::string(poi_id) + " is not in the tree");
}

int PoiTree::ancestor(int node, Level level) const {
  const int d = depth_of(level);
  int cur = node;
  while (cur >= 0 && this->node(cur).depth > d) cur = this->node(cur).parent;
  if (cur < 0 || this->node(cur).depth != d)
    throw std::invalid_argument("node " + this->node(node).id + " has no ancestor at level " + to_string(level));
  return cur;
}

std::vector<int> PoiTree::path(int node) const {
  std::vector<int> out;
  for (int cur = node; cur > 0; cur = this->node(cur).parent) out.push_back(cur);
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<int> PoiTree::leaves_under(int node) const {
  std::vector<int> out;
  std::vector<int> stack = {node};
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    const auto& ch = this->node(cur).children;
    if (ch.empty() && this->node(cur).depth >= 0) out.push_back(cur);
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

bool PoiTree::operator==(const PoiTree& o) const {
  if (levels_ != o.levels_ || nodes_.size() != o.nodes_.size()) return false;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& a = nodes_[i];
    const auto& b = o.nodes_[i];
    if (a.id != b.id || a.name != b.name || a.depth != b.depth || a.parent != b.parent || a.children != b.children ||
        a.lat != b.lat || a.lon != b.lon)
      return false;
  }
  return true;
}

void to_json(nlohmann::json& j, const PoiTree& t) {
  nlohmann::json levels = nlohmann::json::array();
  for (Level l : t.levels_) levels.push_back(to_string(l));
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : t.nodes_) {
    nlohmann::json e = {{"id", n.id},
                        {"name", n.name},
                        {"level", n.depth < 0 ? "root" : to_string(t.levels_[static_cast<std::size_t>(n.depth)])},
                        {"parent", n.parent},
                        {"children", n.children}};
    if (n.children.empty() && n.depth >= 0) {
      e["lat"] = n.lat;
      e["lon"] = n.lon;
    }
    nodes.push_back(std::move(e));
  }
  j = {{"levels", levels}, {"nodes", nodes}};
}

void from_json(const nlohmann::json& j, PoiTree& t) {
  t = PoiTree();
  for (const auto& l : j.at("levels")) t.levels_.push_back(parse_level(l.get<std::string>()));
  for (const auto& e : j.at("nodes")) {
    TreeNode n;
    n.id = e.at("id").get<std::string>();
    n.name = e.at("name").get<std::string>();
    const auto level = e.at("level").get<std::string>();
    n.depth = level == "root" ? -1 : t.depth_of(parse_level(level));
    n.parent = e.at("parent").get<int>();
    n.children = e.at("children").get<std::vector<int>>();
    n.lat = e.value("lat", 0.0);
    n.lon = e.value("lon", 0.0);
    t.nodes_.push_back(std::move(n));
  }
  const int count = static_cast<int>(t.nodes_.size());
  for (const auto& n : t.nodes_) {
    if (n.parent >= count) throw std::invalid_argument("tree json: parent index out of range");
    for (int c : n.children)
      if (c <= 0 || c >= count) throw std::invalid_argument("tree json: child index out of range");
  }
  t.index();
}

numerics::Tensor correlation_matrix(const PoiTree& tree, Level coarse, Level fine) {
  const int dc = tree.depth_of(coarse);
  const int df = tree.depth_of(fine);
  if (dc >= df) throw std::invalid_argument("correlation matrix: " + to_string(coarse) + " is not above " +
                                            to_string(fine));
  const auto& cn = tree.level_nodes(coarse);
  const auto& fn = tree.level_nodes(fine);
  numerics::Tensor m({cn.size(), fn.size()});
  std::vector<std::size_t> count(cn.size(), 0);
  for (int f : fn) ++count[static_cast<std::size_t>(tree.class_index(tree.ancestor(f, coarse)))];
  for (int f : fn) {
    const auto c = static_cast<std::size_t>(tree.class_index(tree.ancestor(f, coarse)));
    m.at(c, static_cast<std::size_t>(tree.class_index(f))) = 1.0 / static_cast<double>(count[c]);
  }
  return m;
}

}  // namespace geotag::hierarchy
