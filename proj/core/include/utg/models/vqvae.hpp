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
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "utg/data/images.hpp"
#include "utg/nn/graph.hpp"
#include "utg/nn/layers.hpp"
#include "utg/nn/model_file.hpp"
#include "utg/nn/param_store.hpp"

namespace utg::models {

/// V code vectors of dimension K, row-major.
struct Codebook {
  std::size_t size = 0;  // V
  std::size_t dim = 0;   // K
  std::vector<double> vectors;

  Codebook() = default;
  Codebook(std::size_t v, std::size_t k, std::vector<double> data);
  /// From explicit rows; all rows must share one length.
  static Codebook from_rows(const std::vector<std::vector<double>>& rows);

  std::span<const double> row(std::size_t v) const { return {vectors.data() + v * dim, dim}; }
  /// True when every row equals row 0.
  bool degenerate() const;
};

/// I x J grid of K-dimensional vectors, stored (i, j, k) row-major.
struct LatentMap {
  std::size_t rows = 0;  // I
  std::size_t cols = 0;  // J
  std::size_t dim = 0;   // K
  std::vector<double> values;

  std::span<const double> cell(std::size_t i, std::size_t j) const {
    return {values.data() + (i * cols + j) * dim, dim};
  }
};

/// I x J grid of codebook indices, row-major.
struct DiscreteLatentMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int32_t> indices;

  std::int32_t at(std::size_t i, std::size_t j) const { return indices[i * cols + j]; }
  std::int32_t& at(std::size_t i, std::size_t j) { return indices[i * cols + j]; }
  friend bool operator==(const DiscreteLatentMap&, const DiscreteLatentMap&) = default;
};

/// Index of the nearest code vector by Euclidean distance; the lowest index
/// wins ties.
std::int32_t nearest_code(std::span<const double> z, const Codebook& cb);
DiscreteLatentMap quantize_nearest(const LatentMap& z, const Codebook& cb);
/// Throws std::out_of_range on an index outside [0, V).
LatentMap embed(const DiscreteLatentMap& dm, const Codebook& cb);

struct VqVaeConfig {
  std::size_t codebook_size = 32;  // V
  std::size_t code_dim = 16;       // K
  std::size_t map_rows = 7;        // I
  std::size_t map_cols = 7;        // J
  std::size_t image_height = 28;
  std::size_t image_width = 28;
  std::vector<std::size_t> encoder_channels{16, 32};
  std::vector<std::size_t> decoder_channels{32, 16};
  double beta = 0.25;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 2e-3;
  std::uint64_t seed = 0;

  /// The encoder downsamples by 4, so image size must be 4 * (I, J).
  void validate() const;
  nlohmann::json to_json() const;
  static VqVaeConfig from_json(const nlohmann::json& j);
};

class VqVaeModel {
 public:
  VqVaeModel() = default;
  explicit VqVaeModel(VqVaeConfig cfg);

  const VqVaeConfig& config() const noexcept { return cfg_; }
  nn::ParamStore<float>& params() noexcept { return params_; }
  const nn::ParamStore<float>& params() const noexcept { return params_; }
  Codebook codebook() const;
  void set_codebook(const Codebook& cb);

  nlohmann::json& metadata() noexcept { return metadata_; }
  const nlohmann::json& metadata() const noexcept { return metadata_; }

  /// Continuous encoder output for each image.
  std::vector<LatentMap> encode_latents(const data::ImageDataset& images) const;
  /// Decodes a batch of maps; intensities lie in [0, 1].
  std::vector<std::vector<float>> decode_maps(const std::vector<DiscreteLatentMap>& maps) const;

  nn::ModelFile to_model_file() const;
  static VqVaeModel from_model_file(const nn::ModelFile& file);
  void save(const std::filesystem::path& path) const;
  static VqVaeModel load(const std::filesystem::path& path);

 private:
  VqVaeConfig cfg_;
  nn::ParamStore<float> params_;
  nlohmann::json metadata_ = nlohmann::json::object();
};

template <class T>
nn::Var vq_encoder(nn::Graph<T>& g, const nn::Binder<T>& p, const VqVaeConfig& cfg, nn::Var x);
template <class T>
nn::Var vq_decoder(nn::Graph<T>& g, const nn::Binder<T>& p, const VqVaeConfig& cfg, nn::Var zq);

struct VqLossNodes {
  nn::Var recon, codebook_loss, commitment_loss, total;
};

/// recon = mean (x - x')^2 over pixels; codebook = mean (sg(z) - zq)^2;
/// commitment = beta * mean (z - sg(zq))^2, with latent means taken over all
/// I*J*K elements of the batch.
template <class T>
VqLossNodes vq_losses(nn::Graph<T>& g, nn::Var x, nn::Var x_recon, nn::Var z, nn::Var zq, T beta);

/// Straight-through quantization: forward value zq, gradient copied to z.
template <class T>
nn::Var straight_through(nn::Graph<T>& g, nn::Var z, nn::Var zq);

struct VqPassNodes {
  nn::Var z, zq, recon;
  VqLossNodes losses;
  std::vector<std::int32_t> indices;
};

/// Full training pass over images x [N, 1, H, W]: encode, quantize against
/// the "codebook" parameter, straight-through, decode, losses.
template <class T>
VqPassNodes vq_forward(nn::Graph<T>& g, const nn::Binder<T>& p, const VqVaeConfig& cfg, const nn::Tensor<T>& x);

struct VqEpochLoss {
  double recon = 0.0;
  double codebook = 0.0;
  double commitment = 0.0;
  double total = 0.0;
};

struct VqTrainResult {
  VqVaeModel model;
  /// Entry 0 is the full-data evaluation before any update.
  std::vector<VqEpochLoss> loss_history;
  /// Code counts over all cells of the training set after training.
  std::vector<std::size_t> usage;
  std::vector<std::string> warnings;
};

VqTrainResult train_vqvae(const data::ImageDataset& ds, VqVaeConfig cfg);
VqEpochLoss evaluate_vqvae(const VqVaeModel& model, const data::ImageDataset& ds);

std::vector<DiscreteLatentMap> encode_dataset_maps(const VqVaeModel& model, const data::ImageDataset& ds);
/// One H x W image with intensities clamped to [0, 1].
std::vector<float> decode_map(const VqVaeModel& model, const DiscreteLatentMap& dm);

/// Latent-map cache: u32 I, u32 J, u32 count, then count * I * J
/// little-endian u16 indices.
void write_map_cache(const std::filesystem::path& path, const std::vector<DiscreteLatentMap>& maps);
std::vector<DiscreteLatentMap> read_map_cache(const std::filesystem::path& path);

}  // namespace utg::models
