// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include "geotag/fusion/positional.hpp"

#include <cmath>
#include <stdexcept>

namespace geotag::fusion {

using numerics::Tensor;
using numerics::Var;

Tensor make_positional_encoding(std::size_t rows, std::size_t width) {
  if (rows == 0) throw std::invalid_argument("positional encoding needs at least one row");
  if (width == 0 || width % 2 != 0)
    throw std::invalid_argument("positional encoding width must be even and positive, got " + std::to_string(width));
  Tensor pe({rows, width});
  for (std::size_t pos = 0; pos < rows; ++pos)
    for (std::size_t i = 0; i < width / 2; ++i) {
      const double angle =
          static_cast<double>(pos) / std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(width));
      pe.at(pos, 2 * i) = std::sin(angle);
      pe.at(pos, 2 * i + 1) = std::cos(angle);
    }
  return pe;
}

Var apply_positions(numerics::Graph& g, Var features, const Tensor& pe, PositionMode mode) {
  if (mode == PositionMode::none) return features;
  const Tensor& f = features.value();
  if (pe.rows() != f.rows())
    throw numerics::ShapeError("positional encoding has " + std::to_string(pe.rows()) + " rows, features have " +
                               std::to_string(f.rows()));
  Var p = g.constant(pe);
  if (mode == PositionMode::concat) return numerics::concat({features, p}, 1);
  if (pe.cols() != f.cols())
    throw numerics::ShapeError("positional encoding width " + std::to_string(pe.cols()) + " != feature width " +
                               std::to_string(f.cols()));
  return numerics::add(features, p);
}

}  // namespace geotag::fusion
