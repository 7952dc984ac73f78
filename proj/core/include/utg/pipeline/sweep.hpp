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
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "utg/data/images.hpp"
#include "utg/pipeline/generate.hpp"

namespace utg::pipeline {

struct SweepPoint {
  double value = 0.0;
  GenerationParams params;
  std::vector<LuRecord> records;
  double mean_novelty = 0.0;
  double novelty_stderr = 0.0;
  /// Tabular: mean |z| over all latent components.
  double mean_abs_latent = 0.0;
  /// Images: mean per-cell entropy of the sampled-from distributions.
  double mean_entropy = 0.0;
};

struct SweepReport {
  /// "s" for the rarity ray, "t" for the threshold.
  std::string parameter;
  std::vector<double> grid;
  std::vector<SweepPoint> points;

  /// Summary statistics without the records.
  nlohmann::json summary() const;
};

/// Throws std::invalid_argument unless the grid is non-empty and strictly
/// monotone.
void check_grid(const std::vector<double>& grid);

/// Rarity along the ray (mu_u, sigma_u) = s * base; s = 0 stands for the
/// prior (0, 1). Every point reuses `seed`, so points are paired.
SweepReport sweep_rarity(const models::VaeModel& model, const NoveltyIndex& reference, const rare::RarityParams& base,
                         const std::vector<double>& grid, std::size_t n, std::uint64_t seed,
                         rare::Sampler sampler = rare::Sampler::kMetropolis, const std::string& model_ref = {});

/// Threshold sweep; every point reuses `seed`.
SweepReport sweep_threshold(const models::VqVaeModel& vq, const models::PriorModel& prior,
                            const NoveltyIndex& reference, const std::vector<double>& grid, std::size_t n,
                            std::uint64_t seed, const std::string& model_ref = {});

/// One row per grid point, one column per sample (up to `per_point`).
data::GrayImage sweep_strip(const SweepReport& report, std::size_t per_point);

}  // namespace utg::pipeline
