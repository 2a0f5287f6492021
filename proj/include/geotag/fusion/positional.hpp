// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "geotag/fusion/schema.hpp"
#include "geotag/numerics/graph.hpp"

namespace geotag::fusion {

/// rows x width sinusoidal table: column 2i holds sin(pos / 10000^(2i/width))
/// and column 2i+1 the matching cosine. Throws on odd width or zero rows.
numerics::Tensor make_positional_encoding(std::size_t rows, std::size_t width);

/// concat: [F | PE] (rows x 2H); add: F + PE; none: F unchanged. The table is
/// a constant and receives no gradient.
numerics::Var apply_positions(numerics::Graph& g, numerics::Var features, const numerics::Tensor& pe,
                              PositionMode mode);

}  // namespace geotag::fusion
