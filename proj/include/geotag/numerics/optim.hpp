// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "geotag/numerics/graph.hpp"

namespace geotag::numerics {

struct AdamOptions {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment estimates per parameter, keyed by parameter name.
struct AdamState {
  AdamOptions options;
  std::int64_t step = 0;
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
};

/// One bias-corrected Adam update using each parameter's accumulated `grad`.
/// Throws if any gradient entry is NaN or infinite, naming the parameter.
void adam_step(ParameterSet& params, AdamState& state);

/// Builds a scalar loss from the current parameter values.
using LossBuilder = std::function<Var(Graph&)>;

/// Largest |analytic - central difference| / max(1, |analytic|) over every
/// entry of every parameter. Graphs are built in eval mode unless `training`
/// is set; a graph that ends up with stochastic dropout is rejected.
double grad_check(ParameterSet& params, const LossBuilder& build, double eps = 1e-5, bool training = false);

}  // namespace geotag::numerics
