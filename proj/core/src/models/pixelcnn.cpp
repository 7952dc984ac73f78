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

#include "utg/models/pixelcnn.hpp"

#include <algorithm>
#include <cmath>
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

void PriorConfig::validate() const {
  if (codebook_size < 2) throw std::invalid_argument("prior arity V must be >= 2");
  if (map_rows == 0 || map_cols == 0) throw std::invalid_argument("map geometry must be at least 1x1");
  if (channels == 0) throw std::invalid_argument("prior channels must be >= 1");
  if (first_kernel % 2 == 0 || hidden_kernel % 2 == 0) throw std::invalid_argument("masked kernels must be odd");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
}

nlohmann::json PriorConfig::to_json() const {
  return {{"codebook_size", codebook_size}, {"map_rows", map_rows},
          {"map_cols", map_cols},           {"channels", channels},
          {"hidden_layers", hidden_layers}, {"first_kernel", first_kernel},
          {"hidden_kernel", hidden_kernel}, {"epochs", epochs},
          {"batch_size", batch_size},       {"learning_rate", learning_rate},
          {"seed", seed}};
}

PriorConfig PriorConfig::from_json(const nlohmann::json& j) {
  PriorConfig c;
  c.codebook_size = j.value("codebook_size", c.codebook_size);
  c.map_rows = j.value("map_rows", c.map_rows);
  c.map_cols = j.value("map_cols", c.map_cols);
  c.channels = j.value("channels", c.channels);
  c.hidden_layers = j.value("hidden_layers", c.hidden_layers);
  c.first_kernel = j.value("first_kernel", c.first_kernel);
  c.hidden_kernel = j.value("hidden_kernel", c.hidden_kernel);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

PriorModel::PriorModel(PriorConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(derive_seed(cfg_.seed, 0x7072'696f'7200ULL));
  nn::add_conv(params_, "pcnn.in", cfg_.codebook_size, cfg_.channels, cfg_.first_kernel, rng);
  for (std::size_t l = 0; l < cfg_.hidden_layers; ++l) {
    nn::add_conv(params_, "pcnn.h" + std::to_string(l), cfg_.channels, cfg_.channels, cfg_.hidden_kernel, rng);
  }
  nn::add_conv(params_, "pcnn.out", cfg_.channels, cfg_.codebook_size, 1, rng);
}

template <class T>
Tensor<T> one_hot_maps(const std::vector<DiscreteLatentMap>& maps, std::size_t v) {
  if (maps.empty()) return Tensor<T>({0, v, 0, 0});
  const std::size_t rows = maps.front().rows, cols = maps.front().cols, hw = rows * cols;
  Tensor<T> t({maps.size(), v, rows, cols});
  auto d = t.data();
  for (std::size_t n = 0; n < maps.size(); ++n) {
    const auto& m = maps[n];
    if (m.rows != rows || m.cols != cols || m.indices.size() != hw) {
      throw std::invalid_argument("latent maps differ in geometry");
    }
    for (std::size_t c = 0; c < hw; ++c) {
      const auto idx = m.indices[c];
      if (idx < 0 || static_cast<std::size_t>(idx) >= v) {
        throw std::invalid_argument("code index " + std::to_string(idx) + " outside [0, " + std::to_string(v) + ")");
      }
      d[(n * v + static_cast<std::size_t>(idx)) * hw + c] = T(1);
    }
  }
  return t;
}

template <class T>
Var prior_logits(Graph<T>& g, const nn::Binder<T>& p, const PriorConfig& cfg, Var one_hot) {
  const nn::ConvSpec first{1, cfg.first_kernel / 2, nn::causal_mask(cfg.first_kernel, cfg.first_kernel, nn::MaskType::kA)};
  const nn::ConvSpec hidden{1, cfg.hidden_kernel / 2,
                            nn::causal_mask(cfg.hidden_kernel, cfg.hidden_kernel, nn::MaskType::kB)};
  const nn::ConvSpec last{1, 0, nn::causal_mask(1, 1, nn::MaskType::kB)};
  Var h = nn::relu(g, nn::conv_layer(g, p, "pcnn.in", one_hot, first));
  for (std::size_t l = 0; l < cfg.hidden_layers; ++l) {
    h = nn::relu(g, nn::conv_layer(g, p, "pcnn.h" + std::to_string(l), h, hidden));
  }
  return nn::conv_layer(g, p, "pcnn.out", h, last);
}

template <class T>
Var prior_loss(Graph<T>& g, const nn::Binder<T>& p, const PriorConfig& cfg, const std::vector<DiscreteLatentMap>& maps) {
  Var logits = prior_logits(g, p, cfg, g.constant(one_hot_maps<T>(maps, cfg.codebook_size)));
  std::vector<std::int32_t> targets;
  targets.reserve(maps.size() * cfg.map_rows * cfg.map_cols);
  for (const auto& m : maps) targets.insert(targets.end(), m.indices.begin(), m.indices.end());
  return nn::softmax_cross_entropy(g, logits, targets);
}

#define UTG_PRIOR_INSTANTIATE(T)                                                                          \
  template Tensor<T> one_hot_maps<T>(const std::vector<DiscreteLatentMap>&, std::size_t);                \
  template Var prior_logits<T>(Graph<T>&, const nn::Binder<T>&, const PriorConfig&, Var);                \
  template Var prior_loss<T>(Graph<T>&, const nn::Binder<T>&, const PriorConfig&,                        \
                             const std::vector<DiscreteLatentMap>&);
UTG_PRIOR_INSTANTIATE(float)
UTG_PRIOR_INSTANTIATE(double)
#undef UTG_PRIOR_INSTANTIATE

namespace {

constexpr std::size_t kInferenceChunk = 256;

std::vector<double> softmax_column(std::span<const float> logits, std::size_t v_count, std::size_t hw,
                                   std::size_t n, std::size_t cell) {
  std::vector<double> p(v_count);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < v_count; ++v) {
    p[v] = logits[(n * v_count + v) * hw + cell];
    mx = std::max(mx, p[v]);
  }
  double total = 0.0;
  for (auto& x : p) {
    x = std::exp(x - mx);
    total += x;
  }
  for (auto& x : p) x /= total;
  return p;
}

void check_geometry(const PriorConfig& cfg, const DiscreteLatentMap& m) {
  if (m.rows != cfg.map_rows || m.cols != cfg.map_cols || m.indices.size() != m.rows * m.cols) {
    throw std::invalid_argument("latent map is " + std::to_string(m.rows) + "x" + std::to_string(m.cols) +
                                ", prior expects " + std::to_string(cfg.map_rows) + "x" +
                                std::to_string(cfg.map_cols));
  }
}

Tensor<float> logits_for(const PriorModel& model, const std::vector<DiscreteLatentMap>& maps) {
  Graph<float> g;
  nn::Binder<float> p(model.params());
  const auto& cfg = model.config();
  return g.value(prior_logits(g, p, cfg, g.constant(one_hot_maps<float>(maps, cfg.codebook_size))));
}

}  // namespace

std::vector<std::vector<std::vector<double>>> PriorModel::predict_all(const std::vector<DiscreteLatentMap>& maps) const {
  for (const auto& m : maps) check_geometry(cfg_, m);
  const std::size_t hw = cfg_.map_rows * cfg_.map_cols;
  std::vector<std::vector<std::vector<double>>> out;
  out.reserve(maps.size());
  for (std::size_t start = 0; start < maps.size(); start += kInferenceChunk) {
    std::vector<DiscreteLatentMap> chunk(maps.begin() + static_cast<std::ptrdiff_t>(start),
                                         maps.begin() + static_cast<std::ptrdiff_t>(std::min(maps.size(), start + kInferenceChunk)));
    auto logits = logits_for(*this, chunk);
    for (std::size_t n = 0; n < chunk.size(); ++n) {
      std::vector<std::vector<double>> cells(hw);
      for (std::size_t c = 0; c < hw; ++c) cells[c] = softmax_column(logits.data(), cfg_.codebook_size, hw, n, c);
      out.push_back(std::move(cells));
    }
  }
  return out;
}

nn::ModelFile PriorModel::to_model_file() const {
  nn::ModelFile f;
  f.config = {{"kind", "prior"}, {"prior", cfg_.to_json()}, {"metadata", metadata_}};
  nn::store_params(params_, "", f);
  return f;
}

PriorModel PriorModel::from_model_file(const nn::ModelFile& file) {
  if (file.kind() != "prior") throw nn::ModelFormatError("model file holds '" + file.kind() + "', expected 'prior'");
  PriorModel m(PriorConfig::from_json(file.config.at("prior")));
  nn::load_params(file, "", m.params_);
  m.metadata_ = file.config.value("metadata", nlohmann::json::object());
  return m;
}

void PriorModel::save(const std::filesystem::path& path) const { nn::write_model_file(path, to_model_file()); }

PriorModel PriorModel::load(const std::filesystem::path& path) { return from_model_file(nn::read_model_file(path)); }

double evaluate_prior(const PriorModel& model, const std::vector<DiscreteLatentMap>& maps) {
  if (maps.empty()) throw std::invalid_argument("cannot evaluate on an empty corpus");
  nn::Binder<float> p(model.params());
  double total = 0.0;
  for (std::size_t start = 0; start < maps.size(); start += kInferenceChunk) {
    std::vector<DiscreteLatentMap> chunk(maps.begin() + static_cast<std::ptrdiff_t>(start),
                                         maps.begin() + static_cast<std::ptrdiff_t>(std::min(maps.size(), start + kInferenceChunk)));
    Graph<float> g;
    total += g.value(prior_loss(g, p, model.config(), chunk)).item() * static_cast<double>(chunk.size());
  }
  return total / static_cast<double>(maps.size());
}

PriorTrainResult train_prior(const std::vector<DiscreteLatentMap>& maps, PriorConfig cfg) {
  if (maps.empty()) throw std::invalid_argument("cannot train a prior on an empty corpus");
  cfg.map_rows = maps.front().rows;
  cfg.map_cols = maps.front().cols;
  for (const auto& m : maps) {
    check_geometry(cfg, m);
    for (auto idx : m.indices) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= cfg.codebook_size) {
        throw std::invalid_argument("code index " + std::to_string(idx) + " outside [0, " +
                                    std::to_string(cfg.codebook_size) + ")");
      }
    }
  }
  PriorTrainResult result{PriorModel(cfg), {}};
  PriorModel& model = result.model;
  result.loss_history.push_back(evaluate_prior(model, maps));
  nn::AdamConfig adam;
  adam.learning_rate = cfg.learning_rate;
  Rng rng(derive_seed(cfg.seed, 1));
  std::vector<std::size_t> order(maps.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<DiscreteLatentMap> batch;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i) batch.push_back(maps[order[i]]);
      Graph<float> g;
      nn::Binder<float> p(model.params());
      model.params().zero_grad();
      Var loss = prior_loss(g, p, cfg, batch);
      const double lv = g.value(loss).item();
      if (!std::isfinite(lv)) throw nn::DivergenceError("prior loss became non-finite");
      g.backward(loss);
      nn::adam_step(model.params(), adam);
      total += lv * static_cast<double>(batch.size());
    }
    result.loss_history.push_back(total / static_cast<double>(maps.size()));
  }
  return result;
}

rare::CategoricalDist predict_categorical(const PriorModel& model, const DiscreteLatentMap& partial, std::size_t i,
                                          std::size_t j) {
  const auto& cfg = model.config();
  check_geometry(cfg, partial);
  if (i >= cfg.map_rows || j >= cfg.map_cols) throw std::out_of_range("cell outside the latent map");
  auto logits = logits_for(model, {partial});
  return rare::CategoricalDist(
      softmax_column(logits.data(), cfg.codebook_size, cfg.map_rows * cfg.map_cols, 0, i * cfg.map_cols + j));
}

GeneratedMaps generate_maps(const PriorModel& model, const std::vector<std::uint64_t>& seeds,
                            const std::optional<rare::ThresholdParam>& manipulation) {
  if (manipulation) manipulation->validate();
  const auto& cfg = model.config();
  const std::size_t hw = cfg.map_rows * cfg.map_cols;
  GeneratedMaps out;
  out.maps.assign(seeds.size(), DiscreteLatentMap{cfg.map_rows, cfg.map_cols, std::vector<std::int32_t>(hw, 0)});
  out.mean_entropy.assign(seeds.size(), 0.0);
  std::vector<Rng> rngs;
  rngs.reserve(seeds.size());
  for (auto s : seeds) rngs.emplace_back(s);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (std::size_t start = 0; start < seeds.size(); start += kInferenceChunk) {
    const std::size_t end = std::min(seeds.size(), start + kInferenceChunk);
    std::vector<DiscreteLatentMap> chunk(out.maps.begin() + static_cast<std::ptrdiff_t>(start),
                                         out.maps.begin() + static_cast<std::ptrdiff_t>(end));
    for (std::size_t cell = 0; cell < hw; ++cell) {
      auto logits = logits_for(model, chunk);
      for (std::size_t n = 0; n < chunk.size(); ++n) {
        rare::CategoricalDist d(softmax_column(logits.data(), cfg.codebook_size, hw, n, cell));
        if (manipulation) d = rare::manipulate_categorical(d, *manipulation);
        out.mean_entropy[start + n] += d.entropy();
        chunk[n].indices[cell] = static_cast<std::int32_t>(d.sample(unit(rngs[start + n])));
      }
    }
    std::move(chunk.begin(), chunk.end(), out.maps.begin() + static_cast<std::ptrdiff_t>(start));
  }
  for (auto& h : out.mean_entropy) h /= static_cast<double>(hw);
  return out;
}

DiscreteLatentMap generate_map(const PriorModel& model, std::uint64_t seed,
                               const std::optional<rare::ThresholdParam>& manipulation) {
  return generate_maps(model, {seed}, manipulation).maps.front();
}

}  // namespace utg::models
