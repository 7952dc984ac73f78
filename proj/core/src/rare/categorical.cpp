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

#include "utg/rare/categorical.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace utg::rare {

CategoricalDist::CategoricalDist(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw std::invalid_argument("categorical distribution needs at least one entry");
  double total = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0) throw std::invalid_argument("categorical entry " + std::to_string(p) + " is invalid");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("categorical distribution sums to " + std::to_string(total));
  }
}

double CategoricalDist::entropy() const {
  double h = 0.0;
  for (double p : probs_) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

std::size_t CategoricalDist::sample(double u) const {
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t v = 0; v < probs_.size(); ++v) {
    if (probs_[v] <= 0.0) continue;
    last_positive = v;
    cum += probs_[v];
    if (u < cum) return v;
  }
  return last_positive;
}

std::size_t CategoricalDist::argmax() const {
  return static_cast<std::size_t>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

void ThresholdParam::validate() const {
  if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("threshold t must lie in (0, 1], got " + std::to_string(t));
}

CategoricalDist manipulate_categorical(const CategoricalDist& d, const ThresholdParam& t) {
  t.validate();
  std::vector<double> out = d.probs();
  double removed = 0.0;
  for (std::size_t v = 0; v < out.size(); ++v) {
    if (d[v] > t.t) {
      removed += d[v] - t.t;
      out[v] = t.t;
    }
  }
  const double share = removed / static_cast<double>(out.size());
  for (double& p : out) p += share;
  return CategoricalDist(std::move(out));
}

}  // namespace utg::rare
