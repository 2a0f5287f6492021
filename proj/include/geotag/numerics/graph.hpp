// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

// Define-by-run reverse-mode differentiation. Every op appends one node to the
// graph; nodes are therefore already in topological order and backward simply
// walks them in reverse.

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "geotag/numerics/tensor.hpp"

namespace geotag::numerics {

enum class OpKind {
  leaf,
  matmul,
  add,
  mul,
  concat,
  slice,
  embed_lookup,
  softmax,
  layer_norm,
  gelu,
  dropout,
  cross_entropy,
  reshape,
  transpose,
  mean,
  mask_fill,
};

std::string_view op_name(OpKind kind);

/// A named trainable tensor. `grad` accumulates across every graph that
/// references the parameter until zero_grad().
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  void zero_grad() { grad = Tensor(value.shape()); }
};

/// Ordered, name-indexed parameter collection. References returned by add()
/// stay valid for the lifetime of the set.
class ParameterSet {
 public:
  Parameter& add(std::string name, Tensor init);
  Parameter& get(std::string_view name);
  const Parameter& get(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  void zero_grad();

  /// Name -> gradient tensor, for every parameter.
  std::map<std::string, Tensor> gradients() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::deque<Parameter> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

class Graph;

/// Handle to a node of a Graph.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, int id) : graph_(graph), id_(id) {}

  Graph* graph() const { return graph_; }
  int id() const { return id_; }
  bool valid() const { return graph_ != nullptr && id_ >= 0; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  Graph* graph_ = nullptr;
  int id_ = -1;
};

namespace detail {

struct Node {
  OpKind kind = OpKind::leaf;
  std::vector<int> inputs;
  Tensor value;
  Tensor grad;
  Parameter* param = nullptr;
  bool requires_grad = false;
  // Op-specific saved state.
  std::vector<int> ints;
  std::vector<double> saved;
  std::vector<double> saved2;
  std::size_t axis = 0;
  std::size_t begin = 0;
  double scalar = 0.0;
};

}  // namespace detail

class Graph {
 public:
  /// `training` enables stochastic dropout, seeded by `seed`.
  explicit Graph(bool training = false, std::uint64_t seed = 0);

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  /// Leaf that requires grad and keeps its gradient on the node.
  Var variable(Tensor value);
  /// Leaf bound to a parameter; gradients accumulate into `param.grad`.
  Var param(Parameter& param);

  bool training() const { return training_; }
  bool has_stochastic_dropout() const { return stochastic_dropout_; }
  std::size_t size() const { return nodes_.size(); }

  const Tensor& value(Var v) const;
  /// Gradient of a non-parameter node after backward(); zeros if untouched.
  Tensor grad(Var v) const;
  OpKind kind(Var v) const;

  /// Reverse sweep from a scalar loss. Parameter gradients are added to
  /// Parameter::grad, so several graphs can contribute to one update.
  void backward(Var loss);

  // Op construction; used by the free functions below.
  Var push(detail::Node node);
  detail::Node& node(int id) { return nodes_.at(static_cast<std::size_t>(id)); }
  const detail::Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::mt19937_64& rng() { return rng_; }
  void mark_stochastic() { stochastic_dropout_ = true; }

 private:
  Tensor& grad_slot(int id);
  void backward_node(int id);

  bool training_;
  bool stochastic_dropout_ = false;
  std::mt19937_64 rng_;
  std::deque<detail::Node> nodes_;
};

// ---- ops -------------------------------------------------------------------
// Rank-1 inputs are treated as a single row wherever a matrix is expected.

Var matmul(Var a, Var b);
/// Elementwise add. `b` may match `a`, be a row vector broadcast over rows of
/// `a`, or be a single-element scalar.
Var add(Var a, Var b);
/// Elementwise product with the same broadcasting rules as add().
Var mul(Var a, Var b);
Var concat(const std::vector<Var>& parts, std::size_t axis);
Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end);
Var embed_lookup(Var table, const std::vector<int>& ids);
/// Row-wise softmax over the last axis.
Var softmax(Var a);
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
Var gelu(Var a);
Var dropout(Var a, double rate);
/// Mean over rows of -log softmax(logits)[label].
Var cross_entropy(Var logits, const std::vector<int>& labels);
/// Mean over rows of -sum_j target_j * log softmax(logits)_j. Differentiable in
/// both arguments; targets need not sum to one.
Var cross_entropy(Var logits, Var targets);
Var reshape(Var a, Shape shape);
Var transpose(Var a);
/// Mean of all entries, as a scalar.
Var mean(Var a);
/// Replace entries where `mask` is true with `value`.
Var mask_fill(Var a, const std::vector<std::uint8_t>& mask, double value);

Var scale(Var a, double factor);

namespace testing {
/// Multiplies every gradient leaving nodes of `kind` by 1.5. Used to check that
/// gradient checking detects a broken backward rule. std::nullopt disables it.
void set_backward_fault(std::optional<OpKind> kind);
}  // namespace testing

}  // namespace geotag::numerics
