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
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "utg/nn/param_store.hpp"
#include "utg/nn/tensor.hpp"

namespace utg::nn {

class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Versioned flat binary model container:
///
///   "UTGM" | u32 version | u64 config length | config JSON bytes
///   | u32 array count | per array: u32 name length, name bytes, u32 rank,
///   u64 dims[rank], little-endian f32 data
///
/// All integers are little-endian. Arrays are written in name order.
struct ModelFile {
  static constexpr std::uint32_t kVersion = 1;

  nlohmann::json config;
  std::map<std::string, Tensor<float>> arrays;

  std::string kind() const { return config.value("kind", std::string{}); }
};

std::vector<std::uint8_t> encode_model_file(const ModelFile& file);
ModelFile decode_model_file(const std::vector<std::uint8_t>& bytes);

void write_model_file(const std::filesystem::path& path, const ModelFile& file);
ModelFile read_model_file(const std::filesystem::path& path);

void store_params(const ParamStore<float>& params, const std::string& prefix, ModelFile& file);
/// Overwrites every parameter of `params` named `prefix + name` from the file.
void load_params(const ModelFile& file, const std::string& prefix, ParamStore<float>& params);

}  // namespace utg::nn
