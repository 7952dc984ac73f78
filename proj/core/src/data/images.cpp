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

#include "utg/data/images.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include "utg/data/tabular.hpp"

namespace utg::data {
namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(LoadError::Kind::kMissingFile, "cannot open '" + path.string() + "'");
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_all(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void check_payload(const std::filesystem::path& path, std::size_t header, std::size_t expected,
                   std::size_t actual) {
  if (actual != header + expected) {
    throw LoadError(LoadError::Kind::kTruncated,
                    "'" + path.string() + "': header promises " + std::to_string(expected) +
                        " payload bytes but file carries " +
                        std::to_string(actual >= header ? actual - header : 0));
  }
}

struct PngReadState {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

}  // namespace

ImageDataset ImageDataset::head(std::size_t n) const {
  n = std::min(n, count);
  ImageDataset out;
  out.count = n;
  out.height = height;
  out.width = width;
  out.pixels.assign(pixels.begin(), pixels.begin() + static_cast<std::ptrdiff_t>(n * pixels_per_image()));
  if (!labels.empty()) out.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

ImageDataset load_idx(const std::filesystem::path& images,
                      const std::optional<std::filesystem::path>& labels) {
  const auto bytes = read_all(images);
  if (bytes.size() < 16) {
    throw LoadError(LoadError::Kind::kTruncated, "'" + images.string() + "' is shorter than an IDX header");
  }
  if (be32(bytes, 0) != kImagesMagic) {
    throw LoadError(LoadError::Kind::kBadMagic, "'" + images.string() + "' is not an IDX image file (bad magic)");
  }
  ImageDataset ds;
  ds.count = be32(bytes, 4);
  ds.height = be32(bytes, 8);
  ds.width = be32(bytes, 12);
  if (ds.height == 0 || ds.width == 0) {
    throw LoadError(LoadError::Kind::kTruncated, "'" + images.string() + "' declares an empty image size");
  }
  check_payload(images, 16, ds.count * ds.height * ds.width, bytes.size());
  ds.pixels.resize(ds.count * ds.height * ds.width);
  for (std::size_t i = 0; i < ds.pixels.size(); ++i) ds.pixels[i] = static_cast<float>(bytes[16 + i]) / 255.0f;

  if (labels) {
    const auto lb = read_all(*labels);
    if (lb.size() < 8) {
      throw LoadError(LoadError::Kind::kTruncated, "'" + labels->string() + "' is shorter than an IDX header");
    }
    if (be32(lb, 0) != kLabelsMagic) {
      throw LoadError(LoadError::Kind::kBadMagic, "'" + labels->string() + "' is not an IDX label file (bad magic)");
    }
    const std::size_t n = be32(lb, 4);
    check_payload(*labels, 8, n, lb.size());
    if (n != ds.count) {
      throw LoadError(LoadError::Kind::kTruncated, "label count " + std::to_string(n) +
                                                       " does not match image count " +
                                                       std::to_string(ds.count));
    }
    ds.labels.assign(lb.begin() + 8, lb.end());
  }
  return ds;
}

void write_idx_images(const std::filesystem::path& path, std::size_t count, std::size_t height,
                      std::size_t width, std::span<const std::uint8_t> bytes) {
  if (bytes.size() != count * height * width) throw std::invalid_argument("pixel count does not match dimensions");
  std::vector<std::uint8_t> out;
  put_be32(out, kImagesMagic);
  put_be32(out, static_cast<std::uint32_t>(count));
  put_be32(out, static_cast<std::uint32_t>(height));
  put_be32(out, static_cast<std::uint32_t>(width));
  out.insert(out.end(), bytes.begin(), bytes.end());
  write_all(path, out);
}

void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels) {
  std::vector<std::uint8_t> out;
  put_be32(out, kLabelsMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  write_all(path, out);
}

std::uint8_t to_byte(float intensity) {
  const float c = std::clamp(intensity, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

std::vector<std::uint8_t> to_bytes(std::span<const float> intensities) {
  std::vector<std::uint8_t> out(intensities.size());
  std::transform(intensities.begin(), intensities.end(), out.begin(), to_byte);
  return out;
}

std::vector<std::uint8_t> encode_png(const GrayImage& image) {
  if (image.pixels.size() != image.width * image.height || image.width == 0 || image.height == 0) {
    throw std::invalid_argument("encode_png: pixel buffer does not match dimensions");
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng initialisation failed");
  }
  std::vector<std::uint8_t> out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng failed while encoding");
  }
  png_set_write_fn(
      png, &out,
      [](png_structp p, png_bytep data, png_size_t len) {
        auto* buf = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(p));
        buf->insert(buf->end(), data, data + len);
      },
      nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t r = 0; r < image.height; ++r) {
    png_write_row(png, const_cast<png_bytep>(image.pixels.data() + r * image.width));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

GrayImage decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw std::runtime_error("not a PNG stream");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng initialisation failed");
  }
  PngReadState state{bytes, 0};
  GrayImage img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng failed while decoding");
  }
  png_set_read_fn(png, &state, [](png_structp p, png_bytep data, png_size_t len) {
    auto* st = static_cast<PngReadState*>(png_get_io_ptr(p));
    if (st->bytes.size() - st->pos < len) png_error(p, "truncated PNG");
    std::memcpy(data, st->bytes.data() + st->pos, len);
    st->pos += len;
  });
  png_read_info(png, info);
  img.width = png_get_image_width(png, info);
  img.height = png_get_image_height(png, info);
  const auto color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  img.pixels.resize(img.width * img.height);
  for (std::size_t r = 0; r < img.height; ++r) png_read_row(png, img.pixels.data() + r * img.width, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const std::filesystem::path& path, const GrayImage& image) { write_all(path, encode_png(image)); }

GrayImage read_png(const std::filesystem::path& path) { return decode_png(read_all(path)); }

GrayImage tile_images(const std::vector<std::vector<float>>& images, std::size_t height, std::size_t width,
                      std::size_t columns, std::size_t pad) {
  if (columns == 0) throw std::invalid_argument("tile_images: zero columns");
  const std::size_t rows = std::max<std::size_t>(1, (images.size() + columns - 1) / columns);
  GrayImage out;
  out.width = columns * width + (columns + 1) * pad;
  out.height = rows * height + (rows + 1) * pad;
  out.pixels.assign(out.width * out.height, 0);
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].size() != height * width) throw std::invalid_argument("tile_images: image size mismatch");
    const std::size_t oy = pad + (i / columns) * (height + pad);
    const std::size_t ox = pad + (i % columns) * (width + pad);
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x)
        out.pixels[(oy + y) * out.width + ox + x] = to_byte(images[i][y * width + x]);
  }
  return out;
}

}  // namespace utg::data
