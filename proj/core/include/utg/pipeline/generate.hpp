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
#include <span>
#include <string>
#include <vector>

#include "utg/data/images.hpp"
#include "utg/data/tabular.hpp"
#include "utg/models/pixelcnn.hpp"
#include "utg/models/vae.hpp"
#include "utg/models/vqvae.hpp"
#include "utg/pipeline/records.hpp"
#include "utg/rare/rare_latent.hpp"

namespace utg::pipeline {

/// Minimum Euclidean distance from `sample` to any row of `reference`.
/// Throws std::invalid_argument on an empty reference or a width mismatch.
double novelty_score(std::span<const double> sample, const std::vector<std::vector<double>>& reference);

/// Reference set in the space novelty is measured in: codec features for
/// tables, raw intensities for images.
class NoveltyIndex {
 public:
  NoveltyIndex() = default;
  explicit NoveltyIndex(std::vector<std::vector<double>> reference);
  static NoveltyIndex for_table(const data::TabularDataset& ds, const data::FeatureCodec& codec);
  static NoveltyIndex for_images(const data::ImageDataset& ds);

  double score(std::span<const double> sample) const;
  std::size_t size() const noexcept { return rows_; }

 private:
  std::vector<double> flat_;
  std::size_t rows_ = 0;
  std::size_t width_ = 0;
};

/// Rebuilds the novelty reference from the training-data location recorded
/// in the model metadata ("data" + "schema" for tables; "images" and an
/// optional "limit" for images). Throws std::runtime_error when absent.
NoveltyIndex reference_from_metadata(const models::VaeModel& model);
NoveltyIndex reference_from_metadata(const models::VqVaeModel& model);

/// Decodes latents to original units before rounding (categorical columns
/// take their argmax level). Throws std::logic_error if the model carries no
/// feature codec.
std::vector<std::vector<double>> decode_tabular(const models::VaeModel& model,
                                                const std::vector<std::vector<double>>& latents);

/// n records whose latents come from one rare-latent chain seeded by `seed`;
/// values are decoded, denormalized and snapped to the schema.
std::vector<LuRecord> generate_lu_tabular(const models::VaeModel& model, const NoveltyIndex& reference,
                                          const rare::RarityParams& p, std::size_t n, std::uint64_t seed,
                                          rare::Sampler sampler = rare::Sampler::kMetropolis,
                                          const std::string& model_ref = {});

struct ImageLuBatch {
  std::vector<LuRecord> records;
  /// Per record, mean entropy of the distributions its cells were drawn from.
  std::vector<double> mean_entropy;
};

/// Map i is sampled with seed derive_seed(seed, i). With `manipulation` empty
/// the prior is sampled as trained.
ImageLuBatch generate_image_batch(const models::VqVaeModel& vq, const models::PriorModel& prior,
                                  const NoveltyIndex& reference, const std::optional<rare::ThresholdParam>& manipulation,
                                  std::size_t n, std::uint64_t seed, const std::string& model_ref = {});

std::vector<LuRecord> generate_lu_images(const models::VqVaeModel& vq, const models::PriorModel& prior,
                                         const NoveltyIndex& reference, const rare::ThresholdParam& t, std::size_t n,
                                         std::uint64_t seed, const std::string& model_ref = {});

/// Checks that the prior's geometry and arity match the VQ-VAE.
void check_compatible(const models::VqVaeModel& vq, const models::PriorModel& prior);

/// Re-decodes a record's stored latent; tabular rows are rounded onto the
/// model's schema.
std::vector<double> redecode(const LuRecord& r, const models::VaeModel& model);
std::vector<double> redecode(const LuRecord& r, const models::VqVaeModel& vq);

}  // namespace utg::pipeline
