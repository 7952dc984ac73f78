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

#include "utg/pipeline/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "utg/rare/stats.hpp"

namespace utg::pipeline {

namespace {

void summarize_novelty(SweepPoint& pt) {
  std::vector<double> nov;
  nov.reserve(pt.records.size());
  for (const auto& r : pt.records) nov.push_back(r.novelty);
  pt.mean_novelty = rare::mean_of(nov);
  pt.novelty_stderr = rare::standard_error(nov);
}

}  // namespace

void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("sweep grid is empty");
  bool up = true, down = true;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    up = up && grid[i] > grid[i - 1];
    down = down && grid[i] < grid[i - 1];
  }
  if (!up && !down) throw std::invalid_argument("sweep grid must be strictly monotone");
}

nlohmann::json SweepReport::summary() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : points) {
    pts.push_back({{"value", p.value},
                   {"params", params_to_json(p.params)},
                   {"n", p.records.size()},
                   {"mean_novelty", p.mean_novelty},
                   {"novelty_stderr", p.novelty_stderr},
                   {"mean_abs_latent", p.mean_abs_latent},
                   {"mean_entropy", p.mean_entropy}});
  }
  return {{"parameter", parameter}, {"grid", grid}, {"points", pts}};
}

SweepReport sweep_rarity(const models::VaeModel& model, const NoveltyIndex& reference, const rare::RarityParams& base,
                         const std::vector<double>& grid, std::size_t n, std::uint64_t seed, rare::Sampler sampler,
                         const std::string& model_ref) {
  check_grid(grid);
  SweepReport rep{"s", grid, {}};
  for (double s : grid) {
    // s = 0 would zero sigma; the ray's origin is read as the prior (0, 1).
    rare::RarityParams p = s == 0.0 ? rare::RarityParams{0.0, 1.0} : rare::RarityParams{s * base.mu_u, s * base.sigma_u};
    p.validate();
    SweepPoint pt;
    pt.value = s;
    pt.params = p;
    pt.records = generate_lu_tabular(model, reference, p, n, seed, sampler, model_ref);
    summarize_novelty(pt);
    std::vector<double> comps;
    for (const auto& r : pt.records) {
      const auto& z = std::get<std::vector<double>>(r.latent);
      comps.insert(comps.end(), z.begin(), z.end());
    }
    pt.mean_abs_latent = rare::mean_abs(comps);
    rep.points.push_back(std::move(pt));
  }
  return rep;
}

SweepReport sweep_threshold(const models::VqVaeModel& vq, const models::PriorModel& prior,
                            const NoveltyIndex& reference, const std::vector<double>& grid, std::size_t n,
                            std::uint64_t seed, const std::string& model_ref) {
  check_grid(grid);
  SweepReport rep{"t", grid, {}};
  for (double t : grid) {
    rare::ThresholdParam tp{t};
    tp.validate();
    auto batch = generate_image_batch(vq, prior, reference, tp, n, seed, model_ref);
    SweepPoint pt;
    pt.value = t;
    pt.params = tp;
    pt.records = std::move(batch.records);
    summarize_novelty(pt);
    pt.mean_entropy = rare::mean_of(batch.mean_entropy);
    rep.points.push_back(std::move(pt));
  }
  return rep;
}

data::GrayImage sweep_strip(const SweepReport& report, std::size_t per_point) {
  if (report.points.empty() || per_point == 0) throw std::invalid_argument("nothing to draw");
  const auto& first = report.points.front().records;
  if (first.empty() || !first.front().is_image()) throw std::invalid_argument("sweep strip needs image records");
  const auto [h, w] = *first.front().shape;
  std::vector<std::vector<float>> cells;
  for (const auto& pt : report.points) {
    for (std::size_t c = 0; c < per_point; ++c) {
      if (c < pt.records.size()) {
        cells.emplace_back(pt.records[c].values.begin(), pt.records[c].values.end());
      } else {
        cells.emplace_back(h * w, 0.0f);
      }
    }
  }
  return data::tile_images(cells, h, w, per_point);
}

}  // namespace utg::pipeline
