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
#include <cmath>
#include <string>
#include <vector>

#include "utg/nn/graph.hpp"
#include "utg/nn/param_store.hpp"

namespace utg::nn {

struct GradCheckOptions {
  double step = 1e-6;
  double tolerance = 1e-4;
  /// Lower bound on the relative-error denominator, so entries whose true
  /// gradient is ~0 are judged on absolute error.
  double denominator_floor = 1e-6;
};

struct GradCheckFailure {
  std::string parameter;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

struct GradCheckReport {
  bool passed = true;
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t checked = 0;
  std::vector<GradCheckFailure> failures;
};

/// Compares backward() against central finite differences for every element
/// of every parameter in `params`.
///
/// `build` records a forward pass on the supplied graph and returns the
/// scalar loss: `Var build(Graph<double>&, ParamStore<double>&)`.
template <class Build>
GradCheckReport grad_check(ParamStore<double>& params, Build&& build,
                           const GradCheckOptions& opts = {}) {
  params.zero_grad();
  {
    Graph<double> g;
    g.backward(build(g, params));
  }
  auto loss_at = [&]() {
    Graph<double> g;
    return g.value(build(g, params)).item();
  };

  GradCheckReport report;
  for (auto& [name, entry] : params.entries()) {
    for (std::size_t i = 0; i < entry.value.size(); ++i) {
      const double saved = entry.value[i];
      entry.value[i] = saved + opts.step;
      const double up = loss_at();
      entry.value[i] = saved - opts.step;
      const double down = loss_at();
      entry.value[i] = saved;

      const double numeric = (up - down) / (2.0 * opts.step);
      const double analytic = entry.grad[i];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), opts.denominator_floor});
      const double rel = std::abs(numeric - analytic) / denom;
      ++report.checked;
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_parameter = name;
      }
      if (!(rel <= opts.tolerance)) {
        report.passed = false;
        report.failures.push_back({name, i, analytic, numeric, rel});
      }
    }
  }
  return report;
}

}  // namespace utg::nn
