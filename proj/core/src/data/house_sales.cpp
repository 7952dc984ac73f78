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

#include "utg/data/house_sales.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "utg/rng.hpp"

namespace utg::data {

Schema house_sales_schema() {
  auto col = [](std::string name, ColumnKind kind, std::string unit) {
    ColumnSpec c;
    c.name = std::move(name);
    c.kind = kind;
    c.unit = std::move(unit);
    return c;
  };
  Schema s;
  s.columns.push_back(col("bedrooms", ColumnKind::kInteger, "count"));
  auto bath = col("bathrooms", ColumnKind::kStepped, "count");
  bath.step = 0.25;
  s.columns.push_back(bath);
  s.columns.push_back(col("sqft_living", ColumnKind::kInteger, "sqft"));
  s.columns.push_back(col("sqft_lot", ColumnKind::kInteger, "sqft"));
  auto floors = col("floors", ColumnKind::kStepped, "count");
  floors.step = 0.5;
  s.columns.push_back(floors);
  auto water = col("waterfront", ColumnKind::kBinary, "flag");
  water.allowed_values = {0, 1};
  s.columns.push_back(water);
  auto view = col("view", ColumnKind::kCategorical, "rating");
  view.allowed_values = {0, 1, 2, 3, 4};
  s.columns.push_back(view);
  auto condition = col("condition", ColumnKind::kCategorical, "rating");
  condition.allowed_values = {1, 2, 3, 4, 5};
  s.columns.push_back(condition);
  auto grade = col("grade", ColumnKind::kInteger, "rating");
  grade.min = 1;
  grade.max = 13;
  s.columns.push_back(grade);
  s.columns.push_back(col("sqft_above", ColumnKind::kInteger, "sqft"));
  s.columns.push_back(col("sqft_basement", ColumnKind::kInteger, "sqft"));
  s.columns.push_back(col("yr_built", ColumnKind::kInteger, "year"));
  s.columns.push_back(col("sqft_living15", ColumnKind::kInteger, "sqft"));
  s.columns.push_back(col("sqft_lot15", ColumnKind::kInteger, "sqft"));
  // Counts and areas are never negative.
  for (auto& c : s.columns) {
    if (c.unit == "count" || c.unit == "sqft") c.min = 0;
  }
  return s;
}

TabularDataset synth_house_sales(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto clampi = [](double v, double lo, double hi) { return std::clamp(std::round(v), lo, hi); };

  std::vector<std::vector<double>> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double size_factor = gauss(rng);
    const double living = clampi(std::exp(7.55 + 0.42 * size_factor), 370, 9000);
    const double bedrooms = clampi(3.3 + 0.9 * size_factor + 0.6 * gauss(rng), 1, 8);
    const double bathrooms =
        std::clamp(std::round((2.1 + 0.75 * size_factor + 0.45 * gauss(rng)) * 4.0) / 4.0, 0.75, 6.0);
    const double lot = clampi(std::exp(8.9 + 0.8 * gauss(rng) + 0.2 * size_factor), 600, 900000);
    const double yr = clampi(1971 + 29 * gauss(rng) * 0.9 + 8 * size_factor, 1900, 2015);
    const double floors_raw = 1.0 + 0.6 * std::max(0.0, gauss(rng) + 0.4 * size_factor + (yr - 1970) / 60.0);
    const double floors = std::clamp(std::round(floors_raw * 2.0) / 2.0, 1.0, 3.0);
    const double waterfront = unit(rng) < 0.02 ? 1.0 : 0.0;
    const double view_score = 0.3 * gauss(rng) + 2.2 * waterfront + 0.25 * size_factor;
    const double view = clampi(view_score < 0.45 ? 0 : 1 + (view_score - 0.45) * 1.6, 0, 4);
    const double cond_u = unit(rng);
    const double condition = cond_u < 0.01 ? 1 : cond_u < 0.03 ? 2 : cond_u < 0.68 ? 3 : cond_u < 0.93 ? 4 : 5;
    const double grade = clampi(7.6 + 1.1 * size_factor + 0.5 * gauss(rng), 4, 12);
    const double basement_share = unit(rng) < 0.6 ? 0.0 : std::clamp(0.18 + 0.1 * gauss(rng), 0.05, 0.45);
    const double basement = std::round(living * basement_share);
    const double above = living - basement;
    const double living15 = clampi(living * std::exp(0.25 * gauss(rng)) * 0.85 + 300, 400, 6200);
    const double lot15 = clampi(lot * std::exp(0.3 * gauss(rng)), 650, 880000);
    rows.push_back({bedrooms, bathrooms, living, lot, floors, waterfront, view, condition, grade, above, basement, yr,
                    living15, lot15});
  }
  return make_dataset(house_sales_schema(), std::move(rows));
}

}  // namespace utg::data
