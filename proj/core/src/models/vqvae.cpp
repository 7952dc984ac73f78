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

#include "utg/models/vqvae.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "utg/nn/adam.hpp"
#include "utg/nn/ops.hpp"
#include "utg/rng.hpp"

namespace utg::models {

using nn::Graph;
using nn::Tensor;
using nn::Var;

Codebook::Codebook(std::size_t v, std::size_t k, std::vector<double> data)
    : size(v), dim(k), vectors(std::move(data)) {
  if (v < 2) throw std::invalid_argument("codebook needs at least two entries");
  if (k == 0 || vectors.size() != v * k) throw std::invalid_argument("codebook data does not match V x K");
  for (double x : vectors)
    if (!std::isfinite(x)) throw std::invalid_argument("codebook holds a non-finite value");
}

Codebook Codebook::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("codebook needs at least two entries");
  std::vector<double> flat;
  for (const auto& r : rows) {
    if (r.size() != rows.front().size()) throw std::invalid_argument("codebook rows differ in length");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return Codebook(rows.size(), rows.front().size(), std::move(flat));
}

bool Codebook::degenerate() const {
  for (std::size_t v = 1; v < size; ++v)
    if (!std::equal(row(v).begin(), row(v).end(), row(0).begin())) return false;
  return true;
}

std::int32_t nearest_code(std::span<const double> z, const Codebook& cb) {
  if (z.size() != cb.dim) {
    throw std::invalid_argument("latent cell has dimension " + std::to_string(z.size()) + ", codebook has " +
                                std::to_string(cb.dim));
  }
  std::int32_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < cb.size; ++v) {
    auto c = cb.row(v);
    double d = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) d += (z[k] - c[k]) * (z[k] - c[k]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::int32_t>(v);
    }
  }
  return best;
}

DiscreteLatentMap quantize_nearest(const LatentMap& z, const Codebook& cb) {
  if (z.dim != cb.dim) throw std::invalid_argument("latent map and codebook disagree on K");
  DiscreteLatentMap dm{z.rows, z.cols, std::vector<std::int32_t>(z.rows * z.cols)};
  for (std::size_t i = 0; i < z.rows; ++i)
    for (std::size_t j = 0; j < z.cols; ++j) dm.at(i, j) = nearest_code(z.cell(i, j), cb);
  return dm;
}

LatentMap embed(const DiscreteLatentMap& dm, const Codebook& cb) {
  LatentMap z{dm.rows, dm.cols, cb.dim, {}};
  z.values.reserve(dm.indices.size() * cb.dim);
  for (auto idx : dm.indices) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= cb.size) {
      throw std::out_of_range("code index " + std::to_string(idx) + " outside [0, " + std::to_string(cb.size) + ")");
    }
    auto c = cb.row(static_cast<std::size_t>(idx));
    z.values.insert(z.values.end(), c.begin(), c.end());
  }
  return z;
}

void VqVaeConfig::validate() const {
  if (codebook_size < 2) throw std::invalid_argument("codebook_size V must be >= 2");
  if (codebook_size > 65536) throw std::invalid_argument("codebook_size V must fit in 16 bits");
  if (code_dim == 0 || map_rows == 0 || map_cols == 0) throw std::invalid_argument("K, I and J must be >= 1");
  if (encoder_channels.empty() || encoder_channels.size() != decoder_channels.size()) {
    throw std::invalid_argument("encoder and decoder need the same non-zero number of stages");
  }
  for (auto c : encoder_channels)
    if (c == 0) throw std::invalid_argument("channel widths must be >= 1");
  for (auto c : decoder_channels)
    if (c == 0) throw std::invalid_argument("channel widths must be >= 1");
  const std::size_t factor = std::size_t{1} << encoder_channels.size();
  if (image_height != map_rows * factor || image_width != map_cols * factor) {
    throw std::invalid_argument("image " + std::to_string(image_height) + "x" + std::to_string(image_width) +
                                " does not downsample by " + std::to_string(factor) + " to the " +
                                std::to_string(map_rows) + "x" + std::to_string(map_cols) + " map");
  }
  if (!(beta > 0.0)) throw std::invalid_argument("commitment weight beta must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
}

nlohmann::json VqVaeConfig::to_json() const {
  return {{"codebook_size", codebook_size},
          {"code_dim", code_dim},
          {"map_rows", map_rows},
          {"map_cols", map_cols},
          {"image_height", image_height},
          {"image_width", image_width},
          {"encoder_channels", encoder_channels},
          {"decoder_channels", decoder_channels},
          {"beta", beta},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"seed", seed}};
}

VqVaeConfig VqVaeConfig::from_json(const nlohmann::json& j) {
  VqVaeConfig c;
  c.codebook_size = j.value("codebook_size", c.codebook_size);
  c.code_dim = j.value("code_dim", c.code_dim);
  c.map_rows = j.value("map_rows", c.map_rows);
  c.map_cols = j.value("map_cols", c.map_cols);
  c.image_height = j.value("image_height", c.image_height);
  c.image_width = j.value("image_width", c.image_width);
  c.encoder_channels = j.value("encoder_channels", c.encoder_channels);
  c.decoder_channels = j.value("decoder_channels", c.decoder_channels);
  c.beta = j.value("beta", c.beta);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

namespace {

const nn::ConvSpec kDown{2, 1, {}};
const nn::ConvSpec kSame3{1, 1, {}};
const nn::ConvSpec kPointwise{1, 0, {}};
const nn::ConvSpec kUp{2, 1, {}};

}  // namespace

VqVaeModel::VqVaeModel(VqVaeConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(derive_seed(cfg_.seed, 0x7671'7661'6500ULL));
  std::size_t in = 1;
  for (std::size_t i = 0; i < cfg_.encoder_channels.size(); ++i) {
    nn::add_conv(params_, "enc." + std::to_string(i), in, cfg_.encoder_channels[i], 4, rng);
    in = cfg_.encoder_channels[i];
  }
  nn::add_conv(params_, "enc.out", in, cfg_.code_dim, 1, rng);
  nn::add_conv(params_, "dec.in", cfg_.code_dim, cfg_.decoder_channels[0], 3, rng);
  for (std::size_t i = 0; i < cfg_.decoder_channels.size(); ++i) {
    const std::size_t out = i + 1 < cfg_.decoder_channels.size() ? cfg_.decoder_channels[i + 1] : 1;
    nn::add_conv_transpose(params_, "dec.up" + std::to_string(i), cfg_.decoder_channels[i], out, 4, 2, rng);
  }
  const double a = 1.0 / static_cast<double>(cfg_.codebook_size);
  params_.add("codebook", nn::uniform({cfg_.codebook_size, cfg_.code_dim}, -a, a, rng));
}

Codebook VqVaeModel::codebook() const {
  const auto& t = params_.value("codebook");
  std::vector<double> d(t.data().begin(), t.data().end());
  return Codebook(cfg_.codebook_size, cfg_.code_dim, std::move(d));
}

void VqVaeModel::set_codebook(const Codebook& cb) {
  if (cb.size != cfg_.codebook_size || cb.dim != cfg_.code_dim) throw std::invalid_argument("codebook shape mismatch");
  auto d = params_.value("codebook").data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<float>(cb.vectors[i]);
}

template <class T>
Var vq_encoder(Graph<T>& g, const nn::Binder<T>& p, const VqVaeConfig& cfg, Var x) {
  for (std::size_t i = 0; i < cfg.encoder_channels.size(); ++i) {
    x = nn::relu(g, nn::conv_layer(g, p, "enc." + std::to_string(i), x, kDown));
  }
  return nn::conv_layer(g, p, "enc.out", x, kPointwise);
}

template <class T>
Var vq_decoder(Graph<T>& g, const nn::Binder<T>& p, const VqVaeConfig& cfg, Var zq) {
  Var h = nn::relu(g, nn::conv_layer(g, p, "dec.in", zq, kSame3));
  const std::size_t n = cfg.decoder_channels.size();
  for (std::size_t i = 0; i < n; ++i) {
    h = nn::conv_transpose_layer(g, p, "dec.up" + std::to_string(i), h, kUp);
    h = i + 1 < n ? nn::relu(g, h) : nn::sigmoid(g, h);
  }
  return h;
}

template <class T>
Var straight_through(Graph<T>& g, Var z, Var zq) {
  const auto& zv = g.value(z);
  const auto& qv = g.value(zq);
  if (zv.shape() != qv.shape()) throw nn::ShapeError("straight-through needs matching shapes");
  return g.record(qv, {z}, [](Graph<T>& gr, std::size_t self) {
    Var parent = gr.parents(self)[0];
    auto src = gr.grad_mut(self).data();
    auto dst = gr.grad_mut(parent).data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  });
}

template <class T>
VqLossNodes vq_losses(Graph<T>& g, Var x, Var x_recon, Var z, Var zq, T beta) {
  VqLossNodes l;
  l.recon = nn::mean(g, nn::square(g, nn::sub(g, x, x_recon)));
  l.codebook_loss = nn::mean(g, nn::square(g, nn::sub(g, nn::stop_gradient(g, z), zq)));
  l.commitment_loss = nn::scale(g, nn::mean(g, nn::square(g, nn::sub(g, z, nn::stop_gradient(g, zq)))), beta);
  l.total = nn::add(g, nn::add(g, l.recon, l.codebook_loss), l.commitment_loss);
  return l;
}

template <class T>
VqPassNodes vq_forward(Graph<T>& g, const nn::Binder<T>& p, const VqVaeConfig& cfg, const Tensor<T>& x) {
  VqPassNodes out;
  Var xv = g.constant(x);
  out.z = vq_encoder(g, p, cfg, xv);
  const auto& zt = g.value(out.z);
  const std::size_t n = zt.dim(0), k = zt.dim(1), h = zt.dim(2), w = zt.dim(3);
  Var rows = nn::channels_to_rows(g, out.z);
  const auto& rv = g.value(rows);
  Var table = p(g, "codebook");
  const auto& cbt = g.value(table);
  Codebook cb(cbt.dim(0), cbt.dim(1), std::vector<double>(cbt.data().begin(), cbt.data().end()));
  out.indices.resize(rv.dim(0));
  std::vector<double> cell(k);
  for (std::size_t r = 0; r < rv.dim(0); ++r) {
    for (std::size_t c = 0; c < k; ++c) cell[c] = static_cast<double>(rv.data()[r * k + c]);
    out.indices[r] = nearest_code(cell, cb);
  }
  out.zq = nn::rows_to_channels(g, nn::gather_rows(g, table, out.indices), n, h, w);
  out.recon = vq_decoder(g, p, cfg, straight_through(g, out.z, out.zq));
  out.losses = vq_losses(g, xv, out.recon, out.z, out.zq, static_cast<T>(cfg.beta));
  return out;
}

#define UTG_VQ_INSTANTIATE(T)                                                                              \
  template Var vq_encoder<T>(Graph<T>&, const nn::Binder<T>&, const VqVaeConfig&, Var);                   \
  template Var vq_decoder<T>(Graph<T>&, const nn::Binder<T>&, const VqVaeConfig&, Var);                   \
  template Var straight_through<T>(Graph<T>&, Var, Var);                                                  \
  template VqLossNodes vq_losses<T>(Graph<T>&, Var, Var, Var, Var, T);                                    \
  template VqPassNodes vq_forward<T>(Graph<T>&, const nn::Binder<T>&, const VqVaeConfig&, const Tensor<T>&);
UTG_VQ_INSTANTIATE(float)
UTG_VQ_INSTANTIATE(double)
#undef UTG_VQ_INSTANTIATE

namespace {

constexpr std::size_t kInferenceChunk = 256;

Tensor<float> image_batch(const data::ImageDataset& ds, const std::vector<std::size_t>& ids) {
  Tensor<float> t({ids.size(), 1, ds.height, ds.width});
  const std::size_t ppi = ds.pixels_per_image();
  for (std::size_t b = 0; b < ids.size(); ++b) {
    auto img = ds.image(ids[b]);
    std::copy(img.begin(), img.end(), t.data().begin() + static_cast<std::ptrdiff_t>(b * ppi));
  }
  return t;
}

void check_images(const VqVaeConfig& cfg, const data::ImageDataset& ds) {
  if (ds.height != cfg.image_height || ds.width != cfg.image_width) {
    throw std::invalid_argument("images are " + std::to_string(ds.height) + "x" + std::to_string(ds.width) +
                                ", model expects " + std::to_string(cfg.image_height) + "x" +
                                std::to_string(cfg.image_width));
  }
}

}  // namespace

std::vector<LatentMap> VqVaeModel::encode_latents(const data::ImageDataset& ds) const {
  check_images(cfg_, ds);
  std::vector<LatentMap> out;
  out.reserve(ds.count);
  nn::Binder<float> p(params_);
  const std::size_t cells = cfg_.map_rows * cfg_.map_cols;
  for (std::size_t start = 0; start < ds.count; start += kInferenceChunk) {
    std::vector<std::size_t> ids(std::min(kInferenceChunk, ds.count - start));
    std::iota(ids.begin(), ids.end(), start);
    Graph<float> g;
    Var rows = nn::channels_to_rows(g, vq_encoder(g, p, cfg_, g.constant(image_batch(ds, ids))));
    auto rv = g.value(rows).data();
    for (std::size_t b = 0; b < ids.size(); ++b) {
      LatentMap m{cfg_.map_rows, cfg_.map_cols, cfg_.code_dim, {}};
      auto first = rv.begin() + static_cast<std::ptrdiff_t>(b * cells * cfg_.code_dim);
      m.values.assign(first, first + static_cast<std::ptrdiff_t>(cells * cfg_.code_dim));
      out.push_back(std::move(m));
    }
  }
  return out;
}

std::vector<std::vector<float>> VqVaeModel::decode_maps(const std::vector<DiscreteLatentMap>& maps) const {
  std::vector<std::vector<float>> out;
  out.reserve(maps.size());
  nn::Binder<float> p(params_);
  const std::size_t cells = cfg_.map_rows * cfg_.map_cols;
  for (std::size_t start = 0; start < maps.size(); start += kInferenceChunk) {
    const std::size_t n = std::min(kInferenceChunk, maps.size() - start);
    std::vector<std::int32_t> idx;
    idx.reserve(n * cells);
    for (std::size_t b = 0; b < n; ++b) {
      const auto& m = maps[start + b];
      if (m.rows != cfg_.map_rows || m.cols != cfg_.map_cols) throw std::invalid_argument("latent map shape mismatch");
      for (auto v : m.indices) {
        if (v < 0 || static_cast<std::size_t>(v) >= cfg_.codebook_size) {
          throw std::out_of_range("code index " + std::to_string(v) + " outside [0, " +
                                  std::to_string(cfg_.codebook_size) + ")");
        }
      }
      idx.insert(idx.end(), m.indices.begin(), m.indices.end());
    }
    Graph<float> g;
    Var zq = nn::rows_to_channels(g, nn::gather_rows(g, p(g, "codebook"), idx), n, cfg_.map_rows, cfg_.map_cols);
    auto img = g.value(vq_decoder(g, p, cfg_, zq)).data();
    const std::size_t ppi = cfg_.image_height * cfg_.image_width;
    for (std::size_t b = 0; b < n; ++b) {
      std::vector<float> one(img.begin() + static_cast<std::ptrdiff_t>(b * ppi),
                             img.begin() + static_cast<std::ptrdiff_t>((b + 1) * ppi));
      for (auto& v : one) v = std::clamp(v, 0.0f, 1.0f);
      out.push_back(std::move(one));
    }
  }
  return out;
}

nn::ModelFile VqVaeModel::to_model_file() const {
  nn::ModelFile f;
  f.config = {{"kind", "vqvae"}, {"vqvae", cfg_.to_json()}, {"metadata", metadata_}};
  nn::store_params(params_, "", f);
  return f;
}

VqVaeModel VqVaeModel::from_model_file(const nn::ModelFile& file) {
  if (file.kind() != "vqvae") throw nn::ModelFormatError("model file holds '" + file.kind() + "', expected 'vqvae'");
  VqVaeModel m(VqVaeConfig::from_json(file.config.at("vqvae")));
  nn::load_params(file, "", m.params_);
  m.metadata_ = file.config.value("metadata", nlohmann::json::object());
  return m;
}

void VqVaeModel::save(const std::filesystem::path& path) const { nn::write_model_file(path, to_model_file()); }

VqVaeModel VqVaeModel::load(const std::filesystem::path& path) { return from_model_file(nn::read_model_file(path)); }

std::vector<DiscreteLatentMap> encode_dataset_maps(const VqVaeModel& model, const data::ImageDataset& ds) {
  const auto cb = model.codebook();
  auto latents = model.encode_latents(ds);
  std::vector<DiscreteLatentMap> out;
  out.reserve(latents.size());
  for (const auto& z : latents) out.push_back(quantize_nearest(z, cb));
  return out;
}

std::vector<float> decode_map(const VqVaeModel& model, const DiscreteLatentMap& dm) {
  return model.decode_maps({dm}).front();
}

VqEpochLoss evaluate_vqvae(const VqVaeModel& model, const data::ImageDataset& ds) {
  check_images(model.config(), ds);
  if (ds.count == 0) throw std::invalid_argument("cannot evaluate on an empty dataset");
  VqEpochLoss acc;
  nn::Binder<float> p(model.params());
  for (std::size_t start = 0; start < ds.count; start += kInferenceChunk) {
    std::vector<std::size_t> ids(std::min(kInferenceChunk, ds.count - start));
    std::iota(ids.begin(), ids.end(), start);
    Graph<float> g;
    auto pass = vq_forward(g, p, model.config(), image_batch(ds, ids));
    const double w = static_cast<double>(ids.size());
    acc.recon += g.value(pass.losses.recon).item() * w;
    acc.codebook += g.value(pass.losses.codebook_loss).item() * w;
    acc.commitment += g.value(pass.losses.commitment_loss).item() * w;
    acc.total += g.value(pass.losses.total).item() * w;
  }
  const double n = static_cast<double>(ds.count);
  return {acc.recon / n, acc.codebook / n, acc.commitment / n, acc.total / n};
}

VqTrainResult train_vqvae(const data::ImageDataset& ds, VqVaeConfig cfg) {
  if (ds.count == 0) throw std::invalid_argument("cannot train a VQ-VAE on an empty dataset");
  cfg.image_height = ds.height;
  cfg.image_width = ds.width;
  const std::size_t factor = std::size_t{1} << cfg.encoder_channels.size();
  if (ds.height % factor != 0 || ds.width % factor != 0) {
    throw std::invalid_argument("image size must be divisible by " + std::to_string(factor));
  }
  cfg.map_rows = ds.height / factor;
  cfg.map_cols = ds.width / factor;
  VqTrainResult result{VqVaeModel(cfg), {}, {}, {}};
  VqVaeModel& model = result.model;
  const std::size_t v_count = cfg.codebook_size, k = cfg.code_dim;
  Rng rng(derive_seed(cfg.seed, 1));

  // Seed the codebook with encoder outputs at random training cells so every
  // code starts inside the data's latent range.
  {
    auto probe = model.encode_latents(ds.head(std::min<std::size_t>(ds.count, 256)));
    std::vector<double> pool;
    for (const auto& z : probe) pool.insert(pool.end(), z.values.begin(), z.values.end());
    const std::size_t cells = pool.size() / k;
    std::uniform_int_distribution<std::size_t> pick(0, cells - 1);
    auto cbd = model.params().value("codebook").data();
    for (std::size_t v = 0; v < v_count; ++v) {
      const std::size_t c = pick(rng);
      for (std::size_t j = 0; j < k; ++j) cbd[v * k + j] = static_cast<float>(pool[c * k + j]);
    }
  }

  result.loss_history.push_back(evaluate_vqvae(model, ds));
  nn::AdamConfig adam;
  adam.learning_rate = cfg.learning_rate;
  std::vector<std::size_t> order(ds.count);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    VqEpochLoss acc;
    std::vector<std::size_t> epoch_usage(v_count, 0);
    std::vector<float> last_latents;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::vector<std::size_t> ids(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + cfg.batch_size)));
      Graph<float> g;
      nn::Binder<float> p(model.params());
      model.params().zero_grad();
      auto pass = vq_forward(g, p, cfg, image_batch(ds, ids));
      const double total = g.value(pass.losses.total).item();
      if (!std::isfinite(total)) throw nn::DivergenceError("VQ-VAE loss became non-finite");
      g.backward(pass.losses.total);
      nn::adam_step(model.params(), adam);
      const double w = static_cast<double>(ids.size());
      acc.recon += g.value(pass.losses.recon).item() * w;
      acc.codebook += g.value(pass.losses.codebook_loss).item() * w;
      acc.commitment += g.value(pass.losses.commitment_loss).item() * w;
      acc.total += total * w;
      for (auto idx : pass.indices) ++epoch_usage[static_cast<std::size_t>(idx)];
      const auto& zr = g.value(pass.z);
      last_latents.assign(zr.data().begin(), zr.data().end());
    }
    const double n = static_cast<double>(ds.count);
    result.loss_history.push_back({acc.recon / n, acc.codebook / n, acc.commitment / n, acc.total / n});

    // Codes that went unused for a whole epoch restart at a random encoder
    // output from the final batch.
    if (epoch + 1 < cfg.epochs && !last_latents.empty()) {
      const std::size_t hw = cfg.map_rows * cfg.map_cols;
      const std::size_t cells = last_latents.size() / k;
      std::uniform_int_distribution<std::size_t> pick(0, cells - 1);
      auto cbd = model.params().value("codebook").data();
      for (std::size_t v = 0; v < v_count; ++v) {
        if (epoch_usage[v] != 0) continue;
        const std::size_t c = pick(rng);
        const std::size_t b = c / hw, s = c % hw;
        for (std::size_t j = 0; j < k; ++j) cbd[v * k + j] = last_latents[(b * k + j) * hw + s];
      }
    }
  }

  result.usage.assign(v_count, 0);
  for (const auto& m : encode_dataset_maps(model, ds))
    for (auto idx : m.indices) ++result.usage[static_cast<std::size_t>(idx)];
  const auto used = std::count_if(result.usage.begin(), result.usage.end(), [](std::size_t c) { return c > 0; });
  if (model.codebook().degenerate()) result.warnings.push_back("codebook collapsed: all code vectors are equal");
  if (used < 2) result.warnings.push_back("only " + std::to_string(used) + " code vector(s) in use");
  return result;
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("latent map cache is truncated");
  return std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 | std::uint32_t{b[2]} << 16 | std::uint32_t{b[3]} << 24;
}

}  // namespace

void write_map_cache(const std::filesystem::path& path, const std::vector<DiscreteLatentMap>& maps) {
  const std::size_t rows = maps.empty() ? 0 : maps.front().rows;
  const std::size_t cols = maps.empty() ? 0 : maps.front().cols;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  put_u32(os, static_cast<std::uint32_t>(rows));
  put_u32(os, static_cast<std::uint32_t>(cols));
  put_u32(os, static_cast<std::uint32_t>(maps.size()));
  for (const auto& m : maps) {
    if (m.rows != rows || m.cols != cols) throw std::invalid_argument("latent maps differ in shape");
    for (auto v : m.indices) {
      if (v < 0 || v > 0xFFFF) throw std::invalid_argument("code index does not fit in 16 bits");
      const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
      os.write(reinterpret_cast<const char*>(b), 2);
    }
  }
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

std::vector<DiscreteLatentMap> read_map_cache(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  const std::size_t rows = get_u32(is), cols = get_u32(is), count = get_u32(is);
  std::vector<DiscreteLatentMap> maps(count, DiscreteLatentMap{rows, cols, std::vector<std::int32_t>(rows * cols)});
  for (auto& m : maps) {
    for (auto& v : m.indices) {
      unsigned char b[2];
      if (!is.read(reinterpret_cast<char*>(b), 2)) throw std::runtime_error("latent map cache is truncated");
      v = static_cast<std::int32_t>(b[0] | (b[1] << 8));
    }
  }
  if (is.peek() != std::char_traits<char>::eof()) throw std::runtime_error("latent map cache has trailing bytes");
  return maps;
}

}  // namespace utg::models
