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

#include "utg/nn/adam.hpp"

#include <cmath>

namespace utg::nn {

template <class T>
void adam_step(ParamStore<T>& params, const AdamConfig& cfg) {
  for (const auto& [name, e] : params.entries()) {
    if (!e.grad.all_finite()) throw DivergenceError("non-finite gradient for parameter '" + name + "'");
  }
  params.advance_step();
  const double t = static_cast<double>(params.step());
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& [name, e] : params.entries()) {
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      const double g = static_cast<double>(e.grad[i]);
      const double m = cfg.beta1 * static_cast<double>(e.first_moment[i]) + (1.0 - cfg.beta1) * g;
      const double v = cfg.beta2 * static_cast<double>(e.second_moment[i]) + (1.0 - cfg.beta2) * g * g;
      e.first_moment[i] = static_cast<T>(m);
      e.second_moment[i] = static_cast<T>(v);
      const double step = cfg.learning_rate * (m / c1) / (std::sqrt(v / c2) + cfg.epsilon);
      e.value[i] = static_cast<T>(static_cast<double>(e.value[i]) - step);
    }
  }
}

template void adam_step<float>(ParamStore<float>&, const AdamConfig&);
template void adam_step<double>(ParamStore<double>&, const AdamConfig&);

}  // namespace utg::nn
