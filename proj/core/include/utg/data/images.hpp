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

namespace utg::data {

/// Grayscale images with intensities in [0, 1], stored image-major then
/// row-major.
struct ImageDataset {
  std::size_t count = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> pixels;
  std::vector<std::int32_t> labels;  // empty when no label file was given

  std::size_t pixels_per_image() const noexcept { return height * width; }
  std::span<const float> image(std::size_t i) const {
    return std::span<const float>(pixels).subspan(i * pixels_per_image(), pixels_per_image());
  }
  /// First `n` images (and labels) as a new dataset.
  ImageDataset head(std::size_t n) const;
};

/// Reads IDX image (magic 0x00000803) and optional label (0x00000801) files.
/// Bytes are scaled to [0, 1] by division by 255.
ImageDataset load_idx(const std::filesystem::path& images,
                      const std::optional<std::filesystem::path>& labels = std::nullopt);

void write_idx_images(const std::filesystem::path& path, std::size_t count, std::size_t height,
                      std::size_t width, std::span<const std::uint8_t> bytes);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

/// Intensity in [0, 1] -> byte, clamping and rounding to nearest.
std::uint8_t to_byte(float intensity);
std::vector<std::uint8_t> to_bytes(std::span<const float> intensities);

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;
};

/// 8-bit grayscale PNG.
std::vector<std::uint8_t> encode_png(const GrayImage& image);
GrayImage decode_png(std::span<const std::uint8_t> bytes);
void write_png(const std::filesystem::path& path, const GrayImage& image);
GrayImage read_png(const std::filesystem::path& path);

/// Tiles equally sized images into a grid with `pad` pixels of spacing;
/// unused cells stay black.
GrayImage tile_images(const std::vector<std::vector<float>>& images, std::size_t height,
                      std::size_t width, std::size_t columns, std::size_t pad = 2);

}  // namespace utg::data
