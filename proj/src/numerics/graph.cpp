// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include "geotag/numerics/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace geotag::numerics {

namespace {

std::optional<OpKind> g_backward_fault;

std::string where(OpKind kind, std::size_t id) {
  return std::string(op_name(kind)) + " (node " + std::to_string(id) + ")";
}

void require(bool cond, OpKind kind, std::size_t id, const std::string& msg) {
  if (!cond) throw ShapeError(where(kind, id) + ": " + msg);
}

enum class Broadcast { same, row, scalar };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, OpKind kind, std::size_t id) {
  if (a.shape() == b.shape()) return Broadcast::same;
  if (b.size() == 1) return Broadcast::scalar;
  if (b.rank() == 1 && b.size() == a.cols()) return Broadcast::row;
  throw ShapeError(where(kind, id) + ": cannot broadcast " + shape_str(b.shape()) + " onto " +
                   shape_str(a.shape()));
}

Graph& graph_of(std::initializer_list<Var> vars) {
  Graph* g = nullptr;
  for (const auto& v : vars) {
    if (!v.valid()) throw std::invalid_argument("operation on an unbound Var");
    if (g && g != v.graph()) throw std::invalid_argument("operands belong to different graphs");
    g = v.graph();
  }
  return *g;
}

detail::Node make_node(Graph& g, OpKind kind, std::vector<int> inputs) {
  detail::Node n;
  n.kind = kind;
  n.inputs = std::move(inputs);
  for (int in : n.inputs) n.requires_grad = n.requires_grad || g.node(in).requires_grad;
  return n;
}

// C[r x m] += A[r x k] * B[k x m]
void gemm_acc(const double* a, const double* b, double* c, std::size_t r, std::size_t k, std::size_t m) {
  std::size_t i = 0;
  for (; i + 4 <= r; i += 4) {
    double* __restrict c0 = c + i * m;
    double* __restrict c1 = c0 + m;
    double* __restrict c2 = c1 + m;
    double* __restrict c3 = c2 + m;
    const double* a0 = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double v0 = a0[p], v1 = a0[k + p], v2 = a0[2 * k + p], v3 = a0[3 * k + p];
      const double* __restrict brow = b + p * m;
      for (std::size_t j = 0; j < m; ++j) {
        const double bv = brow[j];
        c0[j] += v0 * bv;
        c1[j] += v1 * bv;
        c2[j] += v2 * bv;
        c3[j] += v3 * bv;
      }
    }
  }
  for (; i < r; ++i) {
    double* __restrict crow = c + i * m;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* __restrict brow = b + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

Tensor transpose_copy(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  Tensor t({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) t[j * r + i] = a[i * c + j];
  return t;
}

double dot(const double* x, const double* y, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    s0 += x[j] * y[j];
    s1 += x[j + 1] * y[j + 1];
    s2 += x[j + 2] * y[j + 2];
    s3 += x[j + 3] * y[j + 3];
  }
  for (; j < n; ++j) s0 += x[j] * y[j];
  return (s0 + s1) + (s2 + s3);
}

double gelu_cdf(double x) { return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)); }

}  // namespace

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::leaf: return "leaf";
    case OpKind::matmul: return "matmul";
    case OpKind::add: return "add";
    case OpKind::mul: return "mul";
    case OpKind::concat: return "concat";
    case OpKind::slice: return "slice";
    case OpKind::embed_lookup: return "embed_lookup";
    case OpKind::softmax: return "softmax";
    case OpKind::layer_norm: return "layer_norm";
    case OpKind::gelu: return "gelu";
    case OpKind::dropout: return "dropout";
    case OpKind::cross_entropy: return "cross_entropy";
    case OpKind::reshape: return "reshape";
    case OpKind::transpose: return "transpose";
    case OpKind::mean: return "mean";
    case OpKind::mask_fill: return "mask_fill";
  }
  return "unknown";
}

// ---- ParameterSet ------------------------------------------------------------

Parameter& ParameterSet::add(std::string name, Tensor init) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  index_.emplace(name, params_.size());
  Parameter& p = params_.emplace_back();
  p.name = std::move(name);
  p.value = std::move(init);
  p.zero_grad();
  return p;
}

Parameter& ParameterSet::get(std::string_view name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named " + std::string(name));
  return params_[it->second];
}

const Parameter& ParameterSet::get(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named " + std::string(name));
  return params_[it->second];
}

bool ParameterSet::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

std::map<std::string, Tensor> ParameterSet::gradients() const {
  std::map<std::string, Tensor> out;
  for (const auto& p : params_) out.emplace(p.name, p.grad);
  return out;
}

// ---- Graph -------------------------------------------------------------------

const Tensor& Var::value() const { return graph_->value(*this); }

Graph::Graph(bool training, std::uint64_t seed) : training_(training), rng_(seed) {}

Var Graph::push(detail::Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Graph::constant(Tensor value) {
  detail::Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Graph::variable(Tensor value) {
  detail::Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Graph::param(Parameter& param) {
  detail::Node n;
  n.param = &param;
  n.requires_grad = true;
  return push(std::move(n));
}

const Tensor& Graph::value(Var v) const {
  const auto& n = node(v.id());
  return n.param ? n.param->value : n.value;
}

Tensor Graph::grad(Var v) const {
  const auto& n = node(v.id());
  if (n.param) return n.param->grad;
  if (n.grad.empty()) return Tensor(value(v).shape());
  return n.grad;
}

OpKind Graph::kind(Var v) const { return node(v.id()).kind; }

Tensor& Graph::grad_slot(int id) {
  auto& n = node(id);
  if (n.param) {
    if (n.param->grad.shape() != n.param->value.shape()) n.param->zero_grad();
    return n.param->grad;
  }
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Graph::backward(Var loss) {
  if (loss.graph() != this) throw std::invalid_argument("backward: loss belongs to another graph");
  const auto& lv = value(loss);
  if (lv.size() != 1)
    throw ShapeError("backward: loss must be a scalar, got shape " + shape_str(lv.shape()));
  if (!node(loss.id()).requires_grad) return;
  grad_slot(loss.id())[0] += 1.0;
  for (int id = loss.id(); id >= 0; --id) {
    auto& n = node(id);
    if (n.kind == OpKind::leaf || !n.requires_grad || n.grad.empty()) continue;
    if (g_backward_fault && *g_backward_fault == n.kind)
      for (auto& g : n.grad.storage()) g *= 1.5;
    backward_node(id);
  }
}

void Graph::backward_node(int id) {
  auto& n = node(id);
  const Tensor& g = n.grad;
  auto in_rg = [&](std::size_t i) { return node(n.inputs[i]).requires_grad; };
  auto in_val = [&](std::size_t i) -> const Tensor& {
    const auto& in = node(n.inputs[i]);
    return in.param ? in.param->value : in.value;
  };

  switch (n.kind) {
    case OpKind::leaf:
      break;

    case OpKind::matmul: {
      const Tensor& a = in_val(0);
      const Tensor& b = in_val(1);
      const std::size_t r = a.rows(), k = a.cols(), m = b.cols();
      if (in_rg(0)) {
        Tensor& ga = grad_slot(n.inputs[0]);
        for (std::size_t i = 0; i < r; ++i) {
          const double* grow = g.data().data() + i * m;
          double* garow = ga.data().data() + i * k;
          for (std::size_t p = 0; p < k; ++p) garow[p] += dot(grow, b.data().data() + p * m, m);
        }
      }
      if (in_rg(1)) {
        Tensor& gb = grad_slot(n.inputs[1]);
        const Tensor at = transpose_copy(a);
        gemm_acc(at.data().data(), g.data().data(), gb.data().data(), k, r, m);
      }
      break;
    }

    case OpKind::add:
    case OpKind::mul: {
      const Tensor& a = in_val(0);
      const Tensor& b = in_val(1);
      const auto bc = static_cast<Broadcast>(n.ints[0]);
      const std::size_t cols = a.cols();
      const bool is_mul = n.kind == OpKind::mul;
      auto bidx = [&](std::size_t i) {
        return bc == Broadcast::same ? i : bc == Broadcast::row ? i % cols : std::size_t{0};
      };
      if (in_rg(0)) {
        Tensor& ga = grad_slot(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += is_mul ? g[i] * b[bidx(i)] : g[i];
      }
      if (in_rg(1)) {
        Tensor& gb = grad_slot(n.inputs[1]);
        for (std::size_t i = 0; i < g.size(); ++i) gb[bidx(i)] += is_mul ? g[i] * a[i] : g[i];
      }
      break;
    }

    case OpKind::concat: {
      const std::size_t out_cols = n.value.cols();
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        const Tensor& part = in_val(k);
        const std::size_t pr = part.rows(), pc = part.cols();
        if (in_rg(k)) {
          Tensor& gp = grad_slot(n.inputs[k]);
          for (std::size_t i = 0; i < pr; ++i)
            for (std::size_t j = 0; j < pc; ++j) {
              const std::size_t src = n.axis == 0 ? (offset + i) * out_cols + j : i * out_cols + offset + j;
              gp[i * pc + j] += g[src];
            }
        }
        offset += n.axis == 0 ? pr : pc;
      }
      break;
    }

    case OpKind::slice: {
      if (!in_rg(0)) break;
      const Tensor& a = in_val(0);
      Tensor& ga = grad_slot(n.inputs[0]);
      const std::size_t ac = a.cols(), oc = n.value.cols(), orows = n.value.rows();
      for (std::size_t i = 0; i < orows; ++i)
        for (std::size_t j = 0; j < oc; ++j) {
          const std::size_t src = n.axis == 0 ? (n.begin + i) * ac + j : i * ac + n.begin + j;
          ga[src] += g[i * oc + j];
        }
      break;
    }

    case OpKind::embed_lookup: {
      if (!in_rg(0)) break;
      Tensor& gt = grad_slot(n.inputs[0]);
      const std::size_t h = n.value.cols();
      for (std::size_t i = 0; i < n.ints.size(); ++i) {
        double* dst = gt.data().data() + static_cast<std::size_t>(n.ints[i]) * h;
        const double* src = g.data().data() + i * h;
        for (std::size_t j = 0; j < h; ++j) dst[j] += src[j];
      }
      break;
    }

    case OpKind::softmax: {
      if (!in_rg(0)) break;
      Tensor& ga = grad_slot(n.inputs[0]);
      const std::size_t r = n.value.rows(), c = n.value.cols();
      for (std::size_t i = 0; i < r; ++i) {
        const double* y = n.value.data().data() + i * c;
        const double* gy = g.data().data() + i * c;
        double dot = 0.0;
        for (std::size_t j = 0; j < c; ++j) dot += gy[j] * y[j];
        double* gx = ga.data().data() + i * c;
        for (std::size_t j = 0; j < c; ++j) gx[j] += y[j] * (gy[j] - dot);
      }
      break;
    }

    case OpKind::layer_norm: {
      const Tensor& gamma = in_val(1);
      const std::size_t r = n.value.rows(), c = n.value.cols();
      const auto& xhat = n.saved;
      const auto& rstd = n.saved2;
      if (in_rg(1)) {
        Tensor& gg = grad_slot(n.inputs[1]);
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) gg[j] += g[i * c + j] * xhat[i * c + j];
      }
      if (in_rg(2)) {
        Tensor& gbeta = grad_slot(n.inputs[2]);
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) gbeta[j] += g[i * c + j];
      }
      if (in_rg(0)) {
        Tensor& gx = grad_slot(n.inputs[0]);
        std::vector<double> dxhat(c);
        for (std::size_t i = 0; i < r; ++i) {
          double m1 = 0.0, m2 = 0.0;
          for (std::size_t j = 0; j < c; ++j) {
            dxhat[j] = g[i * c + j] * gamma[j];
            m1 += dxhat[j];
            m2 += dxhat[j] * xhat[i * c + j];
          }
          m1 /= static_cast<double>(c);
          m2 /= static_cast<double>(c);
          for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += rstd[i] * (dxhat[j] - m1 - xhat[i * c + j] * m2);
        }
      }
      break;
    }

    case OpKind::gelu: {
      if (!in_rg(0)) break;
      const Tensor& x = in_val(0);
      Tensor& gx = grad_slot(n.inputs[0]);
      const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x[i];
        const double d = gelu_cdf(v) + v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
        gx[i] += g[i] * d;
      }
      break;
    }

    case OpKind::dropout: {
      if (!in_rg(0)) break;
      Tensor& gx = grad_slot(n.inputs[0]);
      if (n.saved.empty()) {
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * n.saved[i];
      }
      break;
    }

    case OpKind::cross_entropy: {
      // saved = softmax probabilities, saved2 = log-probabilities.
      const Tensor& logits = in_val(0);
      const std::size_t r = logits.rows(), c = logits.cols();
      const double scale = g[0] / static_cast<double>(r);
      const bool soft = n.inputs.size() == 2;
      if (in_rg(0)) {
        Tensor& gl = grad_slot(n.inputs[0]);
        for (std::size_t i = 0; i < r; ++i) {
          if (soft) {
            const Tensor& t = in_val(1);
            double tsum = 0.0;
            for (std::size_t j = 0; j < c; ++j) tsum += t[i * c + j];
            for (std::size_t j = 0; j < c; ++j)
              gl[i * c + j] += scale * (n.saved[i * c + j] * tsum - t[i * c + j]);
          } else {
            for (std::size_t j = 0; j < c; ++j) gl[i * c + j] += scale * n.saved[i * c + j];
            gl[i * c + static_cast<std::size_t>(n.ints[i])] -= scale;
          }
        }
      }
      if (soft && in_rg(1)) {
        Tensor& gt = grad_slot(n.inputs[1]);
        for (std::size_t i = 0; i < r * c; ++i) gt[i] -= scale * n.saved2[i];
      }
      break;
    }

    case OpKind::reshape: {
      if (!in_rg(0)) break;
      Tensor& gx = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      break;
    }

    case OpKind::transpose: {
      if (!in_rg(0)) break;
      Tensor& gx = grad_slot(n.inputs[0]);
      const std::size_t r = n.value.rows(), c = n.value.cols();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gx[j * r + i] += g[i * c + j];
      break;
    }

    case OpKind::mean: {
      if (!in_rg(0)) break;
      Tensor& gx = grad_slot(n.inputs[0]);
      const double share = g[0] / static_cast<double>(gx.size());
      for (auto& v : gx.storage()) v += share;
      break;
    }

    case OpKind::mask_fill: {
      if (!in_rg(0)) break;
      Tensor& gx = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (!n.ints[i]) gx[i] += g[i];
      break;
    }
  }
}

// ---- forward rules -----------------------------------------------------------

Var matmul(Var a, Var b) {
  Graph& g = graph_of({a, b});
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t id = g.size();
  require(av.rank() <= 2 && bv.rank() <= 2, OpKind::matmul, id, "operands must be rank 1 or 2");
  require(av.cols() == bv.rows(), OpKind::matmul, id,
          "inner dimensions differ: " + shape_str(av.shape()) + " x " + shape_str(bv.shape()));
  auto n = make_node(g, OpKind::matmul, {a.id(), b.id()});
  n.value = Tensor({av.rows(), bv.cols()});
  gemm_acc(av.data().data(), bv.data().data(), n.value.data().data(), av.rows(), av.cols(), bv.cols());
  return g.push(std::move(n));
}

namespace {

Var binary(Var a, Var b, OpKind kind) {
  Graph& g = graph_of({a, b});
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t id = g.size();
  const Broadcast bc = broadcast_kind(av, bv, kind, id);
  auto n = make_node(g, kind, {a.id(), b.id()});
  n.ints = {static_cast<int>(bc)};
  n.value = av;
  const std::size_t cols = av.cols();
  auto& out = n.value.storage();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double bval = bc == Broadcast::same ? bv[i] : bc == Broadcast::row ? bv[i % cols] : bv[0];
    out[i] = kind == OpKind::add ? out[i] + bval : out[i] * bval;
  }
  return g.push(std::move(n));
}

}  // namespace

Var add(Var a, Var b) { return binary(a, b, OpKind::add); }
Var mul(Var a, Var b) { return binary(a, b, OpKind::mul); }

Var scale(Var a, double factor) { return mul(a, a.graph()->constant(Tensor::scalar(factor))); }

Var concat(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("concat of zero tensors");
  Graph& g = *parts.front().graph();
  const std::size_t id = g.size();
  require(axis <= 1, OpKind::concat, id, "axis must be 0 or 1");
  std::vector<int> ids;
  std::size_t rows = 0, cols = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    require(parts[k].graph() == &g, OpKind::concat, id, "operands belong to different graphs");
    const Tensor& p = parts[k].value();
    require(p.rank() <= 2, OpKind::concat, id, "operands must be rank 1 or 2");
    ids.push_back(parts[k].id());
    if (axis == 0) {
      require(k == 0 || p.cols() == cols, OpKind::concat, id,
              "column count mismatch at operand " + std::to_string(k) + ": " + shape_str(p.shape()));
      cols = p.cols();
      rows += p.rows();
    } else {
      require(k == 0 || p.rows() == rows, OpKind::concat, id,
              "row count mismatch at operand " + std::to_string(k) + ": " + shape_str(p.shape()));
      rows = p.rows();
      cols += p.cols();
    }
  }
  auto n = make_node(g, OpKind::concat, std::move(ids));
  n.axis = axis;
  n.value = Tensor({rows, cols});
  std::size_t offset = 0;
  for (const auto& part : parts) {
    const Tensor& p = part.value();
    for (std::size_t i = 0; i < p.rows(); ++i)
      for (std::size_t j = 0; j < p.cols(); ++j) {
        if (axis == 0)
          n.value.at(offset + i, j) = p.at(i, j);
        else
          n.value.at(i, offset + j) = p.at(i, j);
      }
    offset += axis == 0 ? p.rows() : p.cols();
  }
  return g.push(std::move(n));
}

Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end) {
  Graph& g = graph_of({a});
  const Tensor& av = a.value();
  const std::size_t id = g.size();
  require(axis <= 1 && av.rank() <= 2, OpKind::slice, id, "slice needs a rank-1/2 tensor and axis 0 or 1");
  const std::size_t extent = axis == 0 ? av.rows() : av.cols();
  require(begin < end && end <= extent, OpKind::slice, id,
          "range [" + std::to_string(begin) + ", " + std::to_string(end) + ") outside extent " +
              std::to_string(extent));
  auto n = make_node(g, OpKind::slice, {a.id()});
  n.axis = axis;
  n.begin = begin;
  const std::size_t r = axis == 0 ? end - begin : av.rows();
  const std::size_t c = axis == 1 ? end - begin : av.cols();
  n.value = Tensor({r, c});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      n.value.at(i, j) = axis == 0 ? av.at(begin + i, j) : av.at(i, begin + j);
  return g.push(std::move(n));
}

Var embed_lookup(Var table, const std::vector<int>& ids) {
  Graph& g = graph_of({table});
  const Tensor& t = table.value();
  const std::size_t id = g.size();
  require(t.rank() == 2, OpKind::embed_lookup, id, "table must be rank 2");
  require(!ids.empty(), OpKind::embed_lookup, id, "empty id list");
  auto n = make_node(g, OpKind::embed_lookup, {table.id()});
  const std::size_t h = t.cols();
  n.value = Tensor({ids.size(), h});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    require(ids[i] >= 0 && static_cast<std::size_t>(ids[i]) < t.rows(), OpKind::embed_lookup, id,
            "id " + std::to_string(ids[i]) + " outside table of " + std::to_string(t.rows()) + " rows");
    const auto src = t.row(static_cast<std::size_t>(ids[i]));
    std::copy(src.begin(), src.end(), n.value.row(i).begin());
  }
  n.ints = ids;
  return g.push(std::move(n));
}

Var softmax(Var a) {
  Graph& g = graph_of({a});
  auto n = make_node(g, OpKind::softmax, {a.id()});
  n.value = a.value();
  const std::size_t r = n.value.rows(), c = n.value.cols();
  for (std::size_t i = 0; i < r; ++i) {
    auto row = n.value.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (auto& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (auto& v : row) v /= sum;
  }
  (void)c;
  return g.push(std::move(n));
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  Graph& g = graph_of({x, gamma, beta});
  const Tensor& xv = x.value();
  const std::size_t id = g.size();
  const std::size_t r = xv.rows(), c = xv.cols();
  require(gamma.value().size() == c && beta.value().size() == c, OpKind::layer_norm, id,
          "gamma/beta must have " + std::to_string(c) + " entries");
  auto n = make_node(g, OpKind::layer_norm, {x.id(), gamma.id(), beta.id()});
  n.value = Tensor(xv.shape());
  n.saved.resize(r * c);
  n.saved2.resize(r);
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  for (std::size_t i = 0; i < r; ++i) {
    const auto row = xv.row(i);
    double mu = 0.0;
    for (double v : row) mu += v;
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (double v : row) var += (v - mu) * (v - mu);
    var /= static_cast<double>(c);
    const double rstd = 1.0 / std::sqrt(var + eps);
    n.saved2[i] = rstd;
    for (std::size_t j = 0; j < c; ++j) {
      const double xh = (row[j] - mu) * rstd;
      n.saved[i * c + j] = xh;
      n.value[i * c + j] = gv[j] * xh + bv[j];
    }
  }
  return g.push(std::move(n));
}

Var gelu(Var a) {
  Graph& g = graph_of({a});
  auto n = make_node(g, OpKind::gelu, {a.id()});
  n.value = a.value();
  for (auto& v : n.value.storage()) v = v * gelu_cdf(v);
  return g.push(std::move(n));
}

Var dropout(Var a, double rate) {
  Graph& g = graph_of({a});
  const std::size_t id = g.size();
  require(rate >= 0.0 && rate < 1.0, OpKind::dropout, id, "rate must be in [0, 1)");
  auto n = make_node(g, OpKind::dropout, {a.id()});
  n.value = a.value();
  n.scalar = rate;
  if (g.training() && rate > 0.0) {
    g.mark_stochastic();
    std::bernoulli_distribution keep(1.0 - rate);
    const double inv = 1.0 / (1.0 - rate);
    n.saved.resize(n.value.size());
    for (std::size_t i = 0; i < n.value.size(); ++i) {
      n.saved[i] = keep(g.rng()) ? inv : 0.0;
      n.value[i] *= n.saved[i];
    }
  }
  return g.push(std::move(n));
}

namespace {

// Fills saved (probabilities) and saved2 (log-probabilities) for each row.
void log_softmax_rows(const Tensor& logits, std::vector<double>& probs, std::vector<double>& logp) {
  const std::size_t r = logits.rows(), c = logits.cols();
  probs.resize(r * c);
  logp.resize(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    const auto row = logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    for (std::size_t j = 0; j < c; ++j) {
      logp[i * c + j] = row[j] - lse;
      probs[i * c + j] = std::exp(logp[i * c + j]);
    }
  }
}

}  // namespace

Var cross_entropy(Var logits, const std::vector<int>& labels) {
  Graph& g = graph_of({logits});
  const Tensor& lv = logits.value();
  const std::size_t id = g.size();
  require(labels.size() == lv.rows(), OpKind::cross_entropy, id,
          std::to_string(labels.size()) + " labels for " + std::to_string(lv.rows()) + " rows");
  auto n = make_node(g, OpKind::cross_entropy, {logits.id()});
  log_softmax_rows(lv, n.saved, n.saved2);
  const std::size_t c = lv.cols();
  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < c, OpKind::cross_entropy, id,
            "label " + std::to_string(labels[i]) + " outside " + std::to_string(c) + " classes");
    loss -= n.saved2[i * c + static_cast<std::size_t>(labels[i])];
  }
  n.ints = labels;
  n.value = Tensor::scalar(loss / static_cast<double>(labels.size()));
  return g.push(std::move(n));
}

Var cross_entropy(Var logits, Var targets) {
  Graph& g = graph_of({logits, targets});
  const Tensor& lv = logits.value();
  const Tensor& tv = targets.value();
  const std::size_t id = g.size();
  require(lv.rows() == tv.rows() && lv.cols() == tv.cols(), OpKind::cross_entropy, id,
          "logits " + shape_str(lv.shape()) + " vs targets " + shape_str(tv.shape()));
  auto n = make_node(g, OpKind::cross_entropy, {logits.id(), targets.id()});
  log_softmax_rows(lv, n.saved, n.saved2);
  double loss = 0.0;
  for (std::size_t i = 0; i < tv.size(); ++i) loss -= tv[i] * n.saved2[i];
  n.value = Tensor::scalar(loss / static_cast<double>(lv.rows()));
  return g.push(std::move(n));
}

Var reshape(Var a, Shape shape) {
  Graph& g = graph_of({a});
  const std::size_t id = g.size();
  require(shape_size(shape) == a.value().size(), OpKind::reshape, id,
          "cannot reshape " + shape_str(a.value().shape()) + " to " + shape_str(shape));
  auto n = make_node(g, OpKind::reshape, {a.id()});
  n.value = Tensor(std::move(shape), a.value().storage());
  return g.push(std::move(n));
}

Var transpose(Var a) {
  Graph& g = graph_of({a});
  const Tensor& av = a.value();
  require(av.rank() <= 2, OpKind::transpose, g.size(), "transpose needs rank 1 or 2");
  auto n = make_node(g, OpKind::transpose, {a.id()});
  const std::size_t r = av.rows(), c = av.cols();
  n.value = Tensor({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) n.value[j * r + i] = av[i * c + j];
  return g.push(std::move(n));
}

Var mean(Var a) {
  Graph& g = graph_of({a});
  auto n = make_node(g, OpKind::mean, {a.id()});
  double s = 0.0;
  for (double v : a.value().storage()) s += v;
  n.value = Tensor::scalar(s / static_cast<double>(a.value().size()));
  return g.push(std::move(n));
}

Var mask_fill(Var a, const std::vector<std::uint8_t>& mask, double value) {
  Graph& g = graph_of({a});
  const std::size_t id = g.size();
  require(mask.size() == a.value().size(), OpKind::mask_fill, id,
          "mask of " + std::to_string(mask.size()) + " entries for " + shape_str(a.value().shape()));
  auto n = make_node(g, OpKind::mask_fill, {a.id()});
  n.value = a.value();
  n.ints.assign(mask.begin(), mask.end());
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) n.value[i] = value;
  return g.push(std::move(n));
}

void testing::set_backward_fault(std::optional<OpKind> kind) { g_backward_fault = kind; }

}  // namespace geotag::numerics
