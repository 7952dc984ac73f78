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

#include "utg/data/tabular.hpp"

namespace utg::data {

/// The 14 King County house-sale attributes used for the tabular experiments,
/// in the usual column order (bedrooms ... sqft_lot15).
Schema house_sales_schema();

/// Synthetic stand-in for the House Sales table: correlated attributes drawn
/// from a hand-tuned generative story so the pipeline can run without the
/// original Kaggle download. Every row conforms to house_sales_schema().
TabularDataset synth_house_sales(std::size_t n, std::uint64_t seed);

}  // namespace utg::data
