// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>
#include <string>
#include <vector>

#include "geotag/numerics/graph.hpp"
#include "geotag/temporal/time.hpp"

namespace geotag::temporal {

inline constexpr std::size_t kUniHierVocab = 60;
/// hour (24) + weekday (7) + month (12).
inline constexpr std::size_t kOneHotWidth = 43;

/// Throws std::out_of_range unless every element is within its calendar range.
void check_elements(const TimeElements& el);

/// One learnable table per enabled time element, each kUniHierVocab x H and
/// initialized U(-1, 1). The representation is the sum of the indexed rows.
class UniHierEmbedding {
 public:
  UniHierEmbedding(numerics::ParameterSet& params, std::size_t hidden, std::mt19937_64& rng, bool use_minute = false,
                   const std::string& prefix = "time");

  /// 1 x H.
  numerics::Var embed(numerics::Graph& g, const TimeElements& el) const;
  bool uses_minute() const { return minute_ != nullptr; }

 private:
  numerics::Parameter* hour_;
  numerics::Parameter* weekday_;
  numerics::Parameter* month_;
  numerics::Parameter* minute_ = nullptr;
};

/// Concatenated hour/weekday/month one-hots; exactly three entries are 1.
std::vector<double> one_hot_vector(const TimeElements& el);

/// one_hot_vector(el) times a learned kOneHotWidth x H projection.
class OneHotTime {
 public:
  OneHotTime(numerics::ParameterSet& params, std::size_t hidden, std::mt19937_64& rng,
             const std::string& prefix = "time");

  /// 1 x H.
  numerics::Var embed(numerics::Graph& g, const TimeElements& el) const;

 private:
  numerics::Parameter* projection_;
};

}  // namespace geotag::temporal
