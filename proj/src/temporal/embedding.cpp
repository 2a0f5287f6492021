// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include "geotag/temporal/embedding.hpp"

#include <stdexcept>

namespace geotag::temporal {

using numerics::Graph;
using numerics::Tensor;
using numerics::Var;

void check_elements(const TimeElements& el) {
  auto in = [](int v, int hi, const char* what) {
    if (v < 0 || v >= hi)
      throw std::out_of_range(std::string("time element ") + what + " = " + std::to_string(v) + " outside [0, " +
                              std::to_string(hi) + ")");
  };
  in(el.minute, 60, "minute");
  in(el.hour, 24, "hour");
  in(el.weekday, 7, "weekday");
  in(el.month, 12, "month");
}

UniHierEmbedding::UniHierEmbedding(numerics::ParameterSet& params, std::size_t hidden, std::mt19937_64& rng,
                                   bool use_minute, const std::string& prefix) {
  auto table = [&](const char* name) {
    return &params.add(prefix + "." + name, Tensor::uniform({kUniHierVocab, hidden}, -1.0, 1.0, rng));
  };
  hour_ = table("hour");
  weekday_ = table("weekday");
  month_ = table("month");
  if (use_minute) minute_ = table("minute");
}

Var UniHierEmbedding::embed(Graph& g, const TimeElements& el) const {
  for (int v : {el.minute, el.hour, el.weekday, el.month})
    if (v < 0 || static_cast<std::size_t>(v) >= kUniHierVocab)
      throw std::out_of_range("unihier: index " + std::to_string(v) + " outside table of " +
                              std::to_string(kUniHierVocab));
  Var out = numerics::add(numerics::add(numerics::embed_lookup(g.param(*hour_), {el.hour}),
                                        numerics::embed_lookup(g.param(*weekday_), {el.weekday})),
                          numerics::embed_lookup(g.param(*month_), {el.month}));
  if (minute_) out = numerics::add(out, numerics::embed_lookup(g.param(*minute_), {el.minute}));
  return out;
}

std::vector<double> one_hot_vector(const TimeElements& el) {
  check_elements(el);
  std::vector<double> v(kOneHotWidth, 0.0);
  v[static_cast<std::size_t>(el.hour)] = 1.0;
  v[24 + static_cast<std::size_t>(el.weekday)] = 1.0;
  v[31 + static_cast<std::size_t>(el.month)] = 1.0;
  return v;
}

OneHotTime::OneHotTime(numerics::ParameterSet& params, std::size_t hidden, std::mt19937_64& rng,
                       const std::string& prefix)
    : projection_(&params.add(prefix + ".onehot_proj", Tensor::uniform({kOneHotWidth, hidden}, -0.02, 0.02, rng))) {}

Var OneHotTime::embed(Graph& g, const TimeElements& el) const {
  Var x = g.constant(Tensor({1, kOneHotWidth}, one_hot_vector(el)));
  return numerics::matmul(x, g.param(*projection_));
}

}  // namespace geotag::temporal
