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

#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include "utg/data/house_sales.hpp"
#include "utg/rng.hpp"

namespace utg::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto base = fs::temp_directory_path();
  for (;;) {
    auto candidate = base / (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    if (fs::create_directory(candidate)) {
      path_ = candidate;
      break;
    }
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

data::Schema continuous_schema(std::size_t m) {
  data::Schema s;
  for (std::size_t c = 0; c < m; ++c) {
    data::ColumnSpec col;
    col.name = "c" + std::to_string(c);
    col.kind = data::ColumnKind::kContinuous;
    s.columns.push_back(col);
  }
  return s;
}

TwoClusters two_cluster_dataset(std::size_t n, std::uint64_t seed, std::size_t columns) {
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<double> offset(columns), scale(columns), sign(columns);
  for (std::size_t c = 0; c < columns; ++c) {
    offset[c] = 10.0 * static_cast<double>(c) - 40.0;
    scale[c] = 0.5 + static_cast<double>(c % 5);
    sign[c] = (c * 7 + 3) % 3 == 0 ? -1.0 : 1.0;
  }
  TwoClusters out;
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < n; ++i) {
    const int k = static_cast<int>(i % 2);
    const double side = k == 0 ? 1.0 : -1.0;
    std::vector<double> row(columns);
    for (std::size_t c = 0; c < columns; ++c) row[c] = offset[c] + scale[c] * (side * sign[c] + noise(rng));
    rows.push_back(std::move(row));
    out.cluster.push_back(k);
  }
  out.ds = data::make_dataset(continuous_schema(columns), std::move(rows));
  return out;
}

data::TabularDataset unimodal_dataset(std::size_t n, std::uint64_t seed, std::size_t columns) {
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> loading(columns, std::vector<double>(2));
  for (auto& l : loading) {
    l[0] = gauss(rng);
    l[1] = gauss(rng);
  }
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < n; ++i) {
    const double u0 = gauss(rng), u1 = gauss(rng);
    std::vector<double> row(columns);
    for (std::size_t c = 0; c < columns; ++c) {
      row[c] = 3.0 + loading[c][0] * u0 + loading[c][1] * u1 + 0.1 * gauss(rng);
    }
    rows.push_back(std::move(row));
  }
  return data::make_dataset(continuous_schema(columns), std::move(rows));
}

data::ImageDataset two_pattern_images(std::size_t per_class, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  data::ImageDataset ds;
  ds.count = 2 * per_class;
  ds.height = 8;
  ds.width = 8;
  for (std::size_t i = 0; i < ds.count; ++i) {
    const int cls = static_cast<int>(i % 2);
    for (std::size_t r = 0; r < 8; ++r) {
      for (std::size_t c = 0; c < 8; ++c) {
        const bool lit = cls == 0 ? c < 4 : r < 4;
        const double base = lit ? 0.95 : 0.05;
        ds.pixels.push_back(static_cast<float>(std::clamp(base + jitter(rng), 0.0, 1.0)));
      }
    }
    ds.labels.push_back(cls);
  }
  return ds;
}

models::VqVaeConfig two_pattern_config() {
  models::VqVaeConfig cfg;
  cfg.codebook_size = 8;
  cfg.code_dim = 4;
  cfg.map_rows = 2;
  cfg.map_cols = 2;
  cfg.image_height = 8;
  cfg.image_width = 8;
  cfg.encoder_channels = {8, 8};
  cfg.decoder_channels = {8, 8};
  cfg.epochs = 60;
  cfg.batch_size = 16;
  cfg.learning_rate = 5e-3;
  cfg.seed = 5;
  return cfg;
}

models::DiscreteLatentMap constant_map(std::size_t rows, std::size_t cols, std::int32_t v) {
  return {rows, cols, std::vector<std::int32_t>(rows * cols, v)};
}

models::DiscreteLatentMap random_map(std::size_t rows, std::size_t cols, std::size_t v, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<std::int32_t> pick(0, static_cast<std::int32_t>(v) - 1);
  models::DiscreteLatentMap m{rows, cols, std::vector<std::int32_t>(rows * cols)};
  for (auto& x : m.indices) x = pick(rng);
  return m;
}

ModelKit write_model_kit(const std::filesystem::path& dir) {
  fs::create_directories(dir);
  ModelKit kit;
  kit.houses_csv = dir / "houses.csv";
  kit.houses_schema = dir / "houses.schema.json";
  const auto houses = data::synth_house_sales(300, 11);
  data::write_csv(kit.houses_csv, houses.schema, houses.rows);
  write_text(kit.houses_schema, data::schema_to_json(houses.schema).dump(2));

  models::VaeConfig vc;
  vc.latent_dim = 4;
  vc.encoder_hidden = vc.decoder_hidden = {16};
  vc.epochs = 5;
  vc.seed = 1;
  auto vae = models::train_vae(data::load_csv(kit.houses_csv, houses.schema), vc).model;
  vae.metadata() = {{"data", kit.houses_csv.string()}, {"schema", kit.houses_schema.string()}};
  kit.vae = dir / "vae.utgm";
  vae.save(kit.vae);

  const auto imgs = two_pattern_images(16, 2);
  kit.images = dir / "images.idx";
  data::write_idx_images(kit.images, imgs.count, imgs.height, imgs.width, data::to_bytes(imgs.pixels));
  auto qc = two_pattern_config();
  qc.epochs = 5;
  auto vq = models::train_vqvae(imgs, qc).model;
  vq.metadata() = {{"images", kit.images.string()}};
  kit.vq = dir / "vq.utgm";
  vq.save(kit.vq);

  models::PriorConfig pc;
  pc.codebook_size = qc.codebook_size;
  pc.map_rows = qc.map_rows;
  pc.map_cols = qc.map_cols;
  pc.channels = 8;
  pc.hidden_layers = 1;
  pc.epochs = 3;
  pc.batch_size = 16;
  pc.seed = 1;
  auto prior = models::train_prior(models::encode_dataset_maps(vq, imgs), pc).model;
  kit.prior = dir / "prior.utgm";
  prior.save(kit.prior);
  return kit;
}

}  // namespace utg::testing
