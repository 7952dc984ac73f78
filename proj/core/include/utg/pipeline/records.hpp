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
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "utg/data/tabular.hpp"
#include "utg/models/vqvae.hpp"
#include "utg/rare/categorical.hpp"
#include "utg/rare/rare_latent.hpp"

namespace utg::pipeline {

/// Developer verdict on a generated sample.
enum class Label { kUnlabeled, kSupposable, kUnsupposable, kUnreal };

std::string to_string(Label label);
/// Throws std::invalid_argument on an unknown name.
Label label_from_string(const std::string& s);

using GenerationParams = std::variant<rare::RarityParams, rare::ThresholdParam>;
using Latent = std::variant<std::vector<double>, models::DiscreteLatentMap>;

nlohmann::json params_to_json(const GenerationParams& p);
GenerationParams params_from_json(const nlohmann::json& j);

/// One generated sample with the provenance needed to reproduce it.
struct LuRecord {
  std::string id;
  GenerationParams params;
  std::uint64_t seed = 0;
  Latent latent;
  /// Tabular: the rounded row in schema order. Images: row-major intensities.
  std::vector<double> values;
  /// (height, width) for image records.
  std::optional<std::pair<std::size_t, std::size_t>> shape;
  double novelty = 0.0;
  Label label = Label::kUnlabeled;
  std::string note;
  std::string model_ref;

  bool is_image() const noexcept { return shape.has_value(); }
  friend bool operator==(const LuRecord&, const LuRecord&) = default;
};

nlohmann::json record_to_json(const LuRecord& r);
LuRecord record_from_json(const nlohmann::json& j);

/// One compact JSON object per line, in the given order.
std::string to_jsonl(const std::vector<LuRecord>& records);
std::vector<LuRecord> from_jsonl(const std::string& text);
void write_jsonl(const std::filesystem::path& path, const std::vector<LuRecord>& records);
std::vector<LuRecord> read_jsonl(const std::filesystem::path& path);

/// Values of tabular records as a CSV with the schema header.
void write_csv_projection(const std::filesystem::path& path, const data::Schema& schema,
                          const std::vector<LuRecord>& records);

/// Writes `<id>.png` per image record plus `records.jsonl` into `dir`.
void write_image_records(const std::filesystem::path& dir, const std::vector<LuRecord>& records);
/// Grid of image records, `columns` wide.
void write_image_grid(const std::filesystem::path& path, const std::vector<LuRecord>& records, std::size_t columns);

}  // namespace utg::pipeline
