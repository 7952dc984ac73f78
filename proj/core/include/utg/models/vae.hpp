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
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "utg/data/tabular.hpp"
#include "utg/nn/graph.hpp"
#include "utg/nn/layers.hpp"
#include "utg/nn/model_file.hpp"
#include "utg/nn/param_store.hpp"

namespace utg::models {

struct VaeConfig {
  std::size_t latent_dim = 8;
  std::vector<std::size_t> encoder_hidden{64, 64};
  std::vector<std::size_t> decoder_hidden{64, 64};
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on K = 0, a zero width, batch_size = 0 or
  /// a non-positive learning rate.
  void validate() const;
  nlohmann::json to_json() const;
  static VaeConfig from_json(const nlohmann::json& j);
};

/// Diagonal Gaussian posterior; sigma is stored as log-variance.
struct LatentGaussian {
  std::vector<double> mean;
  std::vector<double> log_var;

  std::size_t size() const noexcept { return mean.size(); }
  std::vector<double> stddev() const;
};

/// z = mu + sigma * eps.
std::vector<double> reparameterize(const LatentGaussian& lat, std::span<const double> eps);

/// 1/2 sum_k (mu_k^2 + sigma_k^2 - 1 - log sigma_k^2).
double kl_to_prior(const LatentGaussian& lat);

class VaeModel {
 public:
  VaeModel() = default;
  /// Freshly initialized weights from cfg.seed. Both heads start with random
  /// weights; zero them through params() for a prior-matching start.
  VaeModel(VaeConfig cfg, std::size_t input_dim);

  const VaeConfig& config() const noexcept { return cfg_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t latent_dim() const noexcept { return cfg_.latent_dim; }

  nn::ParamStore<float>& params() noexcept { return params_; }
  const nn::ParamStore<float>& params() const noexcept { return params_; }

  /// Feature codec of the training table, when trained from one.
  const std::optional<data::FeatureCodec>& codec() const noexcept { return codec_; }
  void set_codec(data::FeatureCodec codec) { codec_ = std::move(codec); }

  /// Free-form provenance (training-data path and the like) persisted with
  /// the model.
  nlohmann::json& metadata() noexcept { return metadata_; }
  const nlohmann::json& metadata() const noexcept { return metadata_; }

  LatentGaussian encode(std::span<const double> x) const;
  std::vector<LatentGaussian> encode_batch(const std::vector<std::vector<double>>& xs) const;
  std::vector<double> decode(std::span<const double> z) const;
  std::vector<std::vector<double>> decode_batch(const std::vector<std::vector<double>>& zs) const;

  nn::ModelFile to_model_file() const;
  static VaeModel from_model_file(const nn::ModelFile& file);
  void save(const std::filesystem::path& path) const;
  static VaeModel load(const std::filesystem::path& path);

 private:
  VaeConfig cfg_;
  std::size_t input_dim_ = 0;
  nn::ParamStore<float> params_;
  std::optional<data::FeatureCodec> codec_;
  nlohmann::json metadata_ = nlohmann::json::object();
};

/// Graph nodes of one VAE pass over a batch x [N, D] with noise eps [N, K].
struct VaeNodes {
  nn::Var mean, log_var, z, recon, recon_loss, kl, loss;
};

/// Records encoder, reparameterization, decoder and the batch-mean loss
/// sum_d (x - x')^2 + KL.
template <class T>
VaeNodes vae_forward(nn::Graph<T>& g, const nn::Binder<T>& params, const VaeConfig& cfg, const nn::Tensor<T>& x,
                     const nn::Tensor<T>& eps);

struct VaeTrainResult {
  VaeModel model;
  /// Entry 0 is the full-data loss before any update; entry e is the mean
  /// minibatch loss of epoch e.
  std::vector<double> loss_history;
};

/// Trains on already-normalized feature rows. Throws std::invalid_argument on
/// an empty set and nn::DivergenceError on a non-finite loss.
VaeTrainResult train_vae(const std::vector<std::vector<double>>& features, const VaeConfig& cfg);
/// Fits a FeatureCodec on the table, trains on its encoding and attaches the
/// codec to the model.
VaeTrainResult train_vae(const data::TabularDataset& ds, const VaeConfig& cfg);

/// Mean ELBO loss over `features` with noise drawn from `seed`.
double evaluate_vae_loss(const VaeModel& model, const std::vector<std::vector<double>>& features, std::uint64_t seed);

/// Decodes n draws z ~ N(0, I). Deterministic in seed.
std::vector<std::vector<double>> generate_standard(const VaeModel& model, std::size_t n, std::uint64_t seed);

}  // namespace utg::models
