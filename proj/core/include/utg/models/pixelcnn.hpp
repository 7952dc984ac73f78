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
#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "utg/models/vqvae.hpp"
#include "utg/nn/graph.hpp"
#include "utg/nn/layers.hpp"
#include "utg/nn/model_file.hpp"
#include "utg/nn/param_store.hpp"
#include "utg/rare/categorical.hpp"

namespace utg::models {

struct PriorConfig {
  std::size_t codebook_size = 32;  // V
  std::size_t map_rows = 7;        // I
  std::size_t map_cols = 7;        // J
  std::size_t channels = 64;
  /// Mask-B 3x3 layers between the mask-A 5x5 input layer and the mask-B
  /// 1x1 output layer.
  std::size_t hidden_layers = 3;
  std::size_t first_kernel = 5;
  std::size_t hidden_kernel = 3;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static PriorConfig from_json(const nlohmann::json& j);
};

class PriorModel {
 public:
  PriorModel() = default;
  explicit PriorModel(PriorConfig cfg);

  const PriorConfig& config() const noexcept { return cfg_; }
  nn::ParamStore<float>& params() noexcept { return params_; }
  const nn::ParamStore<float>& params() const noexcept { return params_; }
  nlohmann::json& metadata() noexcept { return metadata_; }
  const nlohmann::json& metadata() const noexcept { return metadata_; }

  /// Softmax over V at every cell of every map: out[n][cell][v], with cells in
  /// raster order. Each cell only sees cells strictly before it.
  std::vector<std::vector<std::vector<double>>> predict_all(const std::vector<DiscreteLatentMap>& maps) const;

  nn::ModelFile to_model_file() const;
  static PriorModel from_model_file(const nn::ModelFile& file);
  void save(const std::filesystem::path& path) const;
  static PriorModel load(const std::filesystem::path& path);

 private:
  PriorConfig cfg_;
  nn::ParamStore<float> params_;
  nlohmann::json metadata_ = nlohmann::json::object();
};

/// One-hot [N, V, I, J] view of index maps.
template <class T>
nn::Tensor<T> one_hot_maps(const std::vector<DiscreteLatentMap>& maps, std::size_t v);

/// Logits [N, V, I, J].
template <class T>
nn::Var prior_logits(nn::Graph<T>& g, const nn::Binder<T>& p, const PriorConfig& cfg, nn::Var one_hot);

/// Mean next-index cross-entropy over every cell of the batch.
template <class T>
nn::Var prior_loss(nn::Graph<T>& g, const nn::Binder<T>& p, const PriorConfig& cfg,
                   const std::vector<DiscreteLatentMap>& maps);

struct PriorTrainResult {
  PriorModel model;
  /// Entry 0 is the full-corpus loss before any update.
  std::vector<double> loss_history;
};

/// Throws std::invalid_argument on an empty corpus, mixed geometry or an
/// index outside [0, V), and nn::DivergenceError on a non-finite loss.
PriorTrainResult train_prior(const std::vector<DiscreteLatentMap>& maps, PriorConfig cfg);
double evaluate_prior(const PriorModel& model, const std::vector<DiscreteLatentMap>& maps);

/// Distribution of cell (i, j) given the cells before it; later cells of
/// `partial` are ignored.
rare::CategoricalDist predict_categorical(const PriorModel& model, const DiscreteLatentMap& partial, std::size_t i,
                                          std::size_t j);

struct GeneratedMaps {
  std::vector<DiscreteLatentMap> maps;
  /// Mean entropy (nats) of the distributions each map's cells were drawn
  /// from, after manipulation.
  std::vector<double> mean_entropy;
};

/// Samples one map per seed in raster order. Each map owns a generator seeded
/// with its seed and consumes one uniform per cell, drawn through the inverse
/// CDF of the (optionally manipulated) cell distribution.
GeneratedMaps generate_maps(const PriorModel& model, const std::vector<std::uint64_t>& seeds,
                            const std::optional<rare::ThresholdParam>& manipulation);
DiscreteLatentMap generate_map(const PriorModel& model, std::uint64_t seed,
                               const std::optional<rare::ThresholdParam>& manipulation);

}  // namespace utg::models
