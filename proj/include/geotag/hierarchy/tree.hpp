// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "geotag/data/post.hpp"
#include "geotag/numerics/tensor.hpp"
#include "json.hpp"

namespace geotag::hierarchy {

enum class Level { theme, subtheme, poi };

std::string to_string(Level l);
Level parse_level(std::string_view s);

struct TreeNode {
  std::string id;
  std::string name;
  /// Index into PoiTree::levels(); -1 for the root.
  int depth = -1;
  int parent = -1;
  std::vector<int> children;
  double lat = 0.0;
  double lon = 0.0;
};

/// Root -> [theme] -> [subtheme] -> POI. Node 0 is the root; children are
/// ordered lexicographically by id.
class PoiTree {
 public:
  PoiTree() = default;
  /// `levels` is an ordered subset of {theme, subtheme, poi} ending in poi.
  /// Throws on duplicate POI ids or POIs missing a required label.
  PoiTree(const std::vector<data::Poi>& pois, const std::vector<Level>& levels);

  const std::vector<Level>& levels() const { return levels_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const { return nodes_.size(); }
  /// Depth of `level`, or throws std::invalid_argument if absent.
  int depth_of(Level level) const;
  bool has_level(Level level) const;

  /// Nodes of one level in depth-first order; a node's position here is its
  /// class index for that level.
  const std::vector<int>& level_nodes(Level level) const;
  int class_index(int node) const { return class_index_.at(static_cast<std::size_t>(node)); }
  /// Leaf node of a POI id; throws std::out_of_range if unknown.
  int leaf(std::string_view poi_id) const;
  /// Ancestor of `node` at `level` (the node itself if it is at that level).
  int ancestor(int node, Level level) const;
  /// Nodes from the root's child down to `node`.
  std::vector<int> path(int node) const;
  /// Leaves below `node`, depth-first.
  std::vector<int> leaves_under(int node) const;

  bool operator==(const PoiTree& o) const;

 private:
  void index();

  std::vector<Level> levels_;
  std::vector<TreeNode> nodes_;
  std::vector<std::vector<int>> by_level_;
  std::vector<int> class_index_;

  friend void to_json(nlohmann::json& j, const PoiTree& t);
  friend void from_json(const nlohmann::json& j, PoiTree& t);
};

void to_json(nlohmann::json& j, const PoiTree& t);
void from_json(const nlohmann::json& j, PoiTree& t);

/// |coarse| x |fine| matrix with M[c][f] = 1/|fine descendants of c| when f
/// descends from c, else 0.
numerics::Tensor correlation_matrix(const PoiTree& tree, Level coarse, Level fine);

}  // namespace geotag::hierarchy
