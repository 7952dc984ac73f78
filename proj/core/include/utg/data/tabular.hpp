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
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace utg::data {

enum class ColumnKind { kContinuous, kInteger, kStepped, kBinary, kCategorical };

std::string to_string(ColumnKind kind);
ColumnKind column_kind_from_string(const std::string& s);

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::kContinuous;
  /// Grid spacing for kStepped columns (0.25 for bathrooms, 0.5 for floors).
  std::optional<double> step;
  /// Admissible values for kBinary ({0, 1} when left empty) and kCategorical.
  std::vector<double> allowed_values;
  std::string unit;
  /// Optional natural range (e.g. counts and areas are never negative).
  std::optional<double> min;
  std::optional<double> max;

  /// Admissible values with the binary default filled in.
  std::vector<double> levels() const;
};

/// Ordered list of typed columns; names are unique.
struct Schema {
  std::vector<ColumnSpec> columns;

  std::size_t size() const noexcept { return columns.size(); }
  std::optional<std::size_t> index_of(const std::string& name) const;
  std::vector<std::string> names() const;
  /// Throws std::invalid_argument when a ColumnSpec invariant is broken.
  void validate() const;
};

Schema schema_from_json(const nlohmann::json& j);
nlohmann::json schema_to_json(const Schema& schema);
Schema load_schema(const std::filesystem::path& path);

/// Typed failure raised while reading a dataset. Row numbers are 1-based data
/// rows (the header is row 0); column is the schema name when one applies.
class LoadError : public std::runtime_error {
 public:
  enum class Kind {
    kMissingFile,
    kMissingColumn,
    kUnparseableCell,
    kKindViolation,
    kConstantColumn,
    kBadMagic,
    kTruncated,
    kEmpty,
  };

  LoadError(Kind kind, std::string message, std::size_t row = 0, std::string column = {})
      : std::runtime_error(std::move(message)), kind_(kind), row_(row), column_(std::move(column)) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  Kind kind_;
  std::size_t row_;
  std::string column_;
};

struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // population standard deviation
};

/// Rows of raw values in schema order, immutable after load.
struct TabularDataset {
  Schema schema;
  std::vector<std::vector<double>> rows;
  NormStats norm_stats;

  std::size_t size() const noexcept { return rows.size(); }
};

/// Reason `value` violates the column's kind, or nullopt if it conforms.
std::optional<std::string> kind_violation(const ColumnSpec& column, double value);
bool conforms(const Schema& schema, std::span<const double> row);

/// Validates rows against the schema and computes norm stats. With two or
/// more rows, columns without variation are rejected.
TabularDataset make_dataset(Schema schema, std::vector<std::vector<double>> rows);

/// Comma-separated file with a header line naming exactly the schema columns
/// in schema order.
TabularDataset load_csv(const std::filesystem::path& path, const Schema& schema);
void write_csv(const std::filesystem::path& path, const Schema& schema,
               const std::vector<std::vector<double>>& rows);

/// Bidirectional map between raw rows and the continuous-coded feature view
/// the VAE trains on: non-categorical columns are z-scored with the dataset
/// stats, categorical columns become one-hot blocks.
class FeatureCodec {
 public:
  FeatureCodec() = default;
  FeatureCodec(Schema schema, NormStats stats);

  /// Throws LoadError(kConstantColumn) if any column has zero spread.
  static FeatureCodec fit(const TabularDataset& ds);

  const Schema& schema() const noexcept { return schema_; }
  const NormStats& stats() const noexcept { return stats_; }
  std::size_t width() const noexcept { return width_; }

  std::vector<double> encode(std::span<const double> row) const;
  /// Denormalizes z-scored columns and argmax-decodes one-hot blocks.
  std::vector<double> decode(std::span<const double> features) const;

  nlohmann::json to_json() const;
  static FeatureCodec from_json(const nlohmann::json& j);

 private:
  Schema schema_;
  NormStats stats_;
  std::vector<std::size_t> offsets_;
  std::size_t width_ = 0;
};

/// Continuous-coded matrix of the whole dataset (N x codec.width()).
std::vector<std::vector<double>> normalize(const TabularDataset& ds);
std::vector<std::vector<double>> denormalize(const FeatureCodec& codec,
                                             const std::vector<std::vector<double>>& features);

/// Snaps a raw (original-unit) row onto its schema: integers round half away
/// from zero, stepped columns go to the nearest multiple of their step,
/// binary and categorical columns go to the nearest admissible value.
/// Columns with a natural range are clamped into it first.
std::vector<double> round_discrete(std::span<const double> raw, const Schema& schema);

}  // namespace utg::data
