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

#include "utg/models/vae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "utg/nn/adam.hpp"
#include "utg/nn/ops.hpp"
#include "utg/rng.hpp"

namespace utg::models {

using nn::Graph;
using nn::Tensor;
using nn::Var;

namespace {

Tensor<float> rows_to_tensor(const std::vector<std::vector<double>>& rows, std::size_t width) {
  Tensor<float> t({rows.size(), width});
  auto d = t.data();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != width) {
      throw nn::ShapeError("row " + std::to_string(i) + " has width " + std::to_string(rows[i].size()) +
                           ", expected " + std::to_string(width));
    }
    for (std::size_t j = 0; j < width; ++j) d[i * width + j] = static_cast<float>(rows[i][j]);
  }
  return t;
}

std::vector<std::vector<double>> tensor_to_rows(const Tensor<float>& t) {
  const std::size_t n = t.dim(0), w = t.dim(1);
  std::vector<std::vector<double>> out(n, std::vector<double>(w));
  auto d = t.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i][j] = d[i * w + j];
  return out;
}

template <class T>
Var mlp(Graph<T>& g, const nn::Binder<T>& p, const std::string& prefix, Var x, std::size_t layers) {
  for (std::size_t i = 0; i < layers; ++i) {
    x = nn::relu(g, nn::dense_layer(g, p, prefix + "." + std::to_string(i), x));
  }
  return x;
}

template <class T>
Var decoder(Graph<T>& g, const nn::Binder<T>& p, const VaeConfig& cfg, Var z) {
  return nn::dense_layer(g, p, "dec.out", mlp(g, p, "dec", z, cfg.decoder_hidden.size()));
}

template <class T>
std::pair<Var, Var> encoder(Graph<T>& g, const nn::Binder<T>& p, const VaeConfig& cfg, Var x) {
  Var h = mlp(g, p, "enc", x, cfg.encoder_hidden.size());
  return {nn::dense_layer(g, p, "enc.mean", h), nn::dense_layer(g, p, "enc.logvar", h)};
}

}  // namespace

void VaeConfig::validate() const {
  if (latent_dim == 0) throw std::invalid_argument("latent_dim must be >= 1");
  for (auto w : encoder_hidden)
    if (w == 0) throw std::invalid_argument("encoder widths must be >= 1");
  for (auto w : decoder_hidden)
    if (w == 0) throw std::invalid_argument("decoder widths must be >= 1");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
}

nlohmann::json VaeConfig::to_json() const {
  return {{"latent_dim", latent_dim},     {"encoder_hidden", encoder_hidden}, {"decoder_hidden", decoder_hidden},
          {"epochs", epochs},             {"batch_size", batch_size},         {"learning_rate", learning_rate},
          {"seed", seed}};
}

VaeConfig VaeConfig::from_json(const nlohmann::json& j) {
  VaeConfig c;
  c.latent_dim = j.value("latent_dim", c.latent_dim);
  c.encoder_hidden = j.value("encoder_hidden", c.encoder_hidden);
  c.decoder_hidden = j.value("decoder_hidden", c.decoder_hidden);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

std::vector<double> LatentGaussian::stddev() const {
  std::vector<double> s(log_var.size());
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = std::exp(0.5 * log_var[k]);
  return s;
}

std::vector<double> reparameterize(const LatentGaussian& lat, std::span<const double> eps) {
  if (eps.size() != lat.size()) throw nn::ShapeError("noise length does not match latent dimension");
  std::vector<double> z(lat.size());
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = lat.mean[k] + std::exp(0.5 * lat.log_var[k]) * eps[k];
  return z;
}

double kl_to_prior(const LatentGaussian& lat) {
  double s = 0.0;
  for (std::size_t k = 0; k < lat.size(); ++k) {
    const double m = lat.mean[k], lv = lat.log_var[k];
    s += m * m + std::exp(lv) - 1.0 - lv;
  }
  return 0.5 * s;
}

VaeModel::VaeModel(VaeConfig cfg, std::size_t input_dim) : cfg_(std::move(cfg)), input_dim_(input_dim) {
  cfg_.validate();
  if (input_dim_ == 0) throw std::invalid_argument("input width must be >= 1");
  Rng rng(derive_seed(cfg_.seed, 0x7661'6569'6e69'7400ULL));
  std::size_t in = input_dim_;
  for (std::size_t i = 0; i < cfg_.encoder_hidden.size(); ++i) {
    nn::add_dense(params_, "enc." + std::to_string(i), in, cfg_.encoder_hidden[i], rng);
    in = cfg_.encoder_hidden[i];
  }
  nn::add_dense(params_, "enc.mean", in, cfg_.latent_dim, rng);
  nn::add_dense(params_, "enc.logvar", in, cfg_.latent_dim, rng);
  // Start near the prior: small log-variance weights keep early sigma ~ 1.
  for (auto& v : params_.value("enc.logvar.w").data()) v *= 0.1f;
  in = cfg_.latent_dim;
  for (std::size_t i = 0; i < cfg_.decoder_hidden.size(); ++i) {
    nn::add_dense(params_, "dec." + std::to_string(i), in, cfg_.decoder_hidden[i], rng);
    in = cfg_.decoder_hidden[i];
  }
  nn::add_dense(params_, "dec.out", in, input_dim_, rng);
}

LatentGaussian VaeModel::encode(std::span<const double> x) const {
  return encode_batch({std::vector<double>(x.begin(), x.end())}).front();
}

std::vector<LatentGaussian> VaeModel::encode_batch(const std::vector<std::vector<double>>& xs) const {
  if (xs.empty()) return {};
  Graph<float> g;
  nn::Binder<float> p(params_);
  auto [mean, log_var] = encoder(g, p, cfg_, g.constant(rows_to_tensor(xs, input_dim_)));
  auto m = tensor_to_rows(g.value(mean));
  auto lv = tensor_to_rows(g.value(log_var));
  std::vector<LatentGaussian> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = {std::move(m[i]), std::move(lv[i])};
  return out;
}

std::vector<double> VaeModel::decode(std::span<const double> z) const {
  return decode_batch({std::vector<double>(z.begin(), z.end())}).front();
}

std::vector<std::vector<double>> VaeModel::decode_batch(const std::vector<std::vector<double>>& zs) const {
  if (zs.empty()) return {};
  Graph<float> g;
  nn::Binder<float> p(params_);
  return tensor_to_rows(g.value(decoder(g, p, cfg_, g.constant(rows_to_tensor(zs, cfg_.latent_dim)))));
}

nn::ModelFile VaeModel::to_model_file() const {
  nn::ModelFile f;
  f.config = {{"kind", "vae"}, {"vae", cfg_.to_json()}, {"input_dim", input_dim_}, {"metadata", metadata_}};
  if (codec_) f.config["codec"] = codec_->to_json();
  nn::store_params(params_, "", f);
  return f;
}

VaeModel VaeModel::from_model_file(const nn::ModelFile& file) {
  if (file.kind() != "vae") throw nn::ModelFormatError("model file holds '" + file.kind() + "', expected 'vae'");
  VaeModel m(VaeConfig::from_json(file.config.at("vae")), file.config.at("input_dim").get<std::size_t>());
  nn::load_params(file, "", m.params_);
  if (file.config.contains("codec")) m.codec_ = data::FeatureCodec::from_json(file.config.at("codec"));
  m.metadata_ = file.config.value("metadata", nlohmann::json::object());
  return m;
}

void VaeModel::save(const std::filesystem::path& path) const { nn::write_model_file(path, to_model_file()); }

VaeModel VaeModel::load(const std::filesystem::path& path) { return from_model_file(nn::read_model_file(path)); }

template <class T>
VaeNodes vae_forward(Graph<T>& g, const nn::Binder<T>& p, const VaeConfig& cfg, const Tensor<T>& x,
                     const Tensor<T>& eps) {
  const std::size_t n = x.dim(0);
  const T inv_n = T(1) / static_cast<T>(n);
  VaeNodes v;
  Var xv = g.constant(x);
  std::tie(v.mean, v.log_var) = encoder(g, p, cfg, xv);
  Var sigma = nn::exp(g, nn::scale(g, v.log_var, T(0.5)));
  v.z = nn::add(g, v.mean, nn::mul(g, sigma, g.constant(eps)));
  v.recon = decoder(g, p, cfg, v.z);
  v.recon_loss = nn::scale(g, nn::sum(g, nn::square(g, nn::sub(g, xv, v.recon))), inv_n);
  Var terms = nn::sub(g, nn::add(g, nn::square(g, v.mean), nn::exp(g, v.log_var)), v.log_var);
  v.kl = nn::scale(g, nn::sum(g, nn::add_scalar(g, terms, T(-1))), T(0.5) * inv_n);
  v.loss = nn::add(g, v.recon_loss, v.kl);
  return v;
}

template VaeNodes vae_forward<float>(Graph<float>&, const nn::Binder<float>&, const VaeConfig&, const Tensor<float>&,
                                     const Tensor<float>&);
template VaeNodes vae_forward<double>(Graph<double>&, const nn::Binder<double>&, const VaeConfig&,
                                      const Tensor<double>&, const Tensor<double>&);

namespace {

Tensor<float> normal_noise(std::size_t n, std::size_t k, Rng& rng) {
  Tensor<float> t({n, k});
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto& v : t.data()) v = static_cast<float>(gauss(rng));
  return t;
}

double train_batch(VaeModel& model, const Tensor<float>& x, const Tensor<float>& eps) {
  Graph<float> g;
  nn::Binder<float> p(model.params());
  auto v = vae_forward(g, p, model.config(), x, eps);
  const double loss = g.value(v.loss).item();
  if (!std::isfinite(loss)) throw nn::DivergenceError("VAE loss became non-finite");
  g.backward(v.loss);
  return loss;
}

}  // namespace

double evaluate_vae_loss(const VaeModel& model, const std::vector<std::vector<double>>& features, std::uint64_t seed) {
  if (features.empty()) throw std::invalid_argument("cannot evaluate on an empty set");
  Rng rng(seed);
  auto x = rows_to_tensor(features, model.input_dim());
  auto eps = normal_noise(features.size(), model.latent_dim(), rng);
  Graph<float> g;
  nn::Binder<float> p(model.params());
  return g.value(vae_forward(g, p, model.config(), x, eps).loss).item();
}

VaeTrainResult train_vae(const std::vector<std::vector<double>>& features, const VaeConfig& cfg) {
  cfg.validate();
  if (features.empty()) throw std::invalid_argument("cannot train a VAE on an empty dataset");
  const std::size_t d = features.front().size();
  VaeTrainResult result{VaeModel(cfg, d), {}};
  VaeModel& model = result.model;
  nn::AdamConfig adam;
  adam.learning_rate = cfg.learning_rate;

  Rng rng(derive_seed(cfg.seed, 1));
  result.loss_history.push_back(evaluate_vae_loss(model, features, derive_seed(cfg.seed, 2)));
  if (!std::isfinite(result.loss_history.back())) throw nn::DivergenceError("initial VAE loss is non-finite");

  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<double>> batch;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(features[order[i]]);
      auto x = rows_to_tensor(batch, d);
      auto eps = normal_noise(batch.size(), cfg.latent_dim, rng);
      model.params().zero_grad();
      total += train_batch(model, x, eps) * static_cast<double>(batch.size());
      nn::adam_step(model.params(), adam);
    }
    result.loss_history.push_back(total / static_cast<double>(order.size()));
  }
  return result;
}

VaeTrainResult train_vae(const data::TabularDataset& ds, const VaeConfig& cfg) {
  if (ds.size() == 0) throw std::invalid_argument("cannot train a VAE on an empty dataset");
  auto codec = data::FeatureCodec::fit(ds);
  std::vector<std::vector<double>> features;
  features.reserve(ds.size());
  for (const auto& row : ds.rows) features.push_back(codec.encode(row));
  auto result = train_vae(features, cfg);
  result.model.set_codec(std::move(codec));
  return result;
}

std::vector<std::vector<double>> generate_standard(const VaeModel& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) return {};
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> zs(n, std::vector<double>(model.latent_dim()));
  for (auto& z : zs)
    for (auto& v : z) v = gauss(rng);
  return model.decode_batch(zs);
}

}  // namespace utg::models
