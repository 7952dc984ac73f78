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

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace utg::rare {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test. The p-value uses the asymptotic
/// Kolmogorov distribution with the Stephens small-sample correction.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// One-sample KS statistic against a continuous CDF.
template <class Cdf>
double ks_one_sample_statistic(std::vector<double> xs, Cdf&& cdf);

/// P(K > lambda) for the Kolmogorov distribution.
double kolmogorov_survival(double lambda);

double mean_of(std::span<const double> xs);
double mean_abs(std::span<const double> xs);
/// Unbiased sample variance (n - 1 denominator).
double sample_variance(std::span<const double> xs);
double standard_error(std::span<const double> xs);

/// Counts in `bins` equal-width bins over [lo, hi]; values outside are
/// clamped into the end bins.
std::vector<std::size_t> histogram(std::span<const double> xs, double lo, double hi, std::size_t bins);

template <class Cdf>
double ks_one_sample_statistic(std::vector<double> xs, Cdf&& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace utg::rare
