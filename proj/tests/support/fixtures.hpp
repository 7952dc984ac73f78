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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "utg/data/images.hpp"
#include "utg/data/tabular.hpp"
#include "utg/models/pixelcnn.hpp"
#include "utg/models/vae.hpp"
#include "utg/models/vqvae.hpp"

namespace utg::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "utg");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_text(const std::filesystem::path& path);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Continuous columns c0..c{m-1}, each with its own offset and scale.
data::Schema continuous_schema(std::size_t m);

/// Two tight, well separated clusters of equal size. In normalized units
/// every column sits near +1 for one cluster and -1 for the other (signs
/// vary by column) with noise of about 0.05. Rows alternate A, B, A, ...
struct TwoClusters {
  data::TabularDataset ds;
  std::vector<int> cluster;  // 0 or 1 per row
};
TwoClusters two_cluster_dataset(std::size_t n, std::uint64_t seed, std::size_t columns = 16);

/// One Gaussian cloud generated by two latent factors plus small noise.
data::TabularDataset unimodal_dataset(std::size_t n, std::uint64_t seed, std::size_t columns = 8);

/// 8x8 images of two classes: class 0 lights the left half, class 1 the top
/// half. Intensities carry +-0.05 noise, clamped to [0, 1]. Classes
/// alternate and are stored as labels.
data::ImageDataset two_pattern_images(std::size_t per_class, std::uint64_t seed);

/// VQ-VAE sized for two_pattern_images: V=8, K=4, 2x2 maps.
models::VqVaeConfig two_pattern_config();

/// Raster-ordered index maps.
models::DiscreteLatentMap constant_map(std::size_t rows, std::size_t cols, std::int32_t v);
models::DiscreteLatentMap random_map(std::size_t rows, std::size_t cols, std::size_t v, std::uint64_t seed);

/// Small trained models written to disk the way the CLI writes them, with
/// metadata pointing at their training data.
struct ModelKit {
  std::filesystem::path houses_csv, houses_schema, vae;
  std::filesystem::path images, vq, prior;
};
ModelKit write_model_kit(const std::filesystem::path& dir);

}  // namespace utg::testing
