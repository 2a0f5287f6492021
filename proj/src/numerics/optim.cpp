// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include "geotag/numerics/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace geotag::numerics {

void adam_step(ParameterSet& params, AdamState& state) {
  for (const auto& p : params) {
    if (!p.grad.all_finite()) throw std::runtime_error("adam_step: non-finite gradient in parameter " + p.name);
    if (p.grad.shape() != p.value.shape())
      throw ShapeError("adam_step: gradient shape " + shape_str(p.grad.shape()) + " does not match parameter " +
                       p.name + " " + shape_str(p.value.shape()));
  }
  const auto& opt = state.options;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  for (auto& p : params) {
    auto [mit, m_new] = state.m.try_emplace(p.name, p.value.shape());
    auto [vit, v_new] = state.v.try_emplace(p.name, p.value.shape());
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    if (m.shape() != p.value.shape() || v.shape() != p.value.shape())
      throw ShapeError("adam_step: moment shape mismatch for " + p.name);
    auto& w = p.value.storage();
    const auto& g = p.grad.storage();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
      v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
    }
  }
}

double grad_check(ParameterSet& params, const LossBuilder& build, double eps, bool training) {
  if (eps < 1e-7 || eps > 1e-3) throw std::invalid_argument("grad_check: eps must lie in [1e-7, 1e-3]");
  auto evaluate = [&](bool with_backward) {
    Graph g(training, 0);
    Var loss = build(g);
    if (g.has_stochastic_dropout())
      throw std::logic_error("grad_check: graph uses stochastic dropout; disable training mode");
    if (with_backward) g.backward(loss);
    return loss.value()[0];
  };

  params.zero_grad();
  evaluate(true);
  const auto analytic = params.gradients();

  double worst = 0.0;
  for (auto& p : params) {
    const Tensor& ga = analytic.at(p.name);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double orig = p.value[i];
      p.value[i] = orig + eps;
      const double up = evaluate(false);
      p.value[i] = orig - eps;
      const double down = evaluate(false);
      p.value[i] = orig;
      const double numeric = (up - down) / (2.0 * eps);
      const double err = std::abs(ga[i] - numeric) / std::max(1.0, std::abs(ga[i]));
      worst = std::max(worst, err);
    }
  }
  params.zero_grad();
  return worst;
}

}  // namespace geotag::numerics
