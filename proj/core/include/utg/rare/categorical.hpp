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

#include <cstddef>
#include <vector>

namespace utg::rare {

/// Probability vector over V codebook entries: non-negative, sums to 1
/// within 1e-9.
class CategoricalDist {
 public:
  CategoricalDist() = default;
  /// Throws std::invalid_argument if `probs` is empty, has a negative or
  /// non-finite entry, or does not sum to 1 within 1e-9.
  explicit CategoricalDist(std::vector<double> probs);

  const std::vector<double>& probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t v) const { return probs_[v]; }

  /// Shannon entropy in nats.
  double entropy() const;
  /// Inverse-CDF draw for u in [0, 1).
  std::size_t sample(double u) const;
  std::size_t argmax() const;

 private:
  std::vector<double> probs_;
};

/// Threshold t in (0, 1].
struct ThresholdParam {
  double t = 1.0;

  void validate() const;
  friend bool operator==(const ThresholdParam&, const ThresholdParam&) = default;
};

/// Clamp-and-redistribute: every entry strictly above t is cut to t, and the
/// total removed mass is spread evenly over all V entries (clamped ones
/// included). Identity when max(d) <= t.
CategoricalDist manipulate_categorical(const CategoricalDist& d, const ThresholdParam& t);

}  // namespace utg::rare
