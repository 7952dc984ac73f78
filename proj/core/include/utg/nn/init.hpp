// Copyright 2026 The utg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <random>

#include "utg/nn/tensor.hpp"
#include "utg/rng.hpp"

namespace utg::nn {

/// N(0, 2/fan_in) weights, suited to ReLU stacks.
inline Tensor<float> he_normal(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor<float> t(std::move(shape));
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  for (auto& v : t.data()) v = static_cast<float>(dist(rng));
  return t;
}

inline Tensor<float> uniform(Shape shape, double lo, double hi, Rng& rng) {
  Tensor<float> t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& v : t.data()) v = static_cast<float>(dist(rng));
  return t;
}

}  // namespace utg::nn
