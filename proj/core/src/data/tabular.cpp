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

#include "utg/data/tabular.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace utg::data {
namespace {

constexpr double kGridTolerance = 1e-9;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::optional<double> parse_number(const std::string& cell) {
  double v = 0.0;
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double nearest_level(double x, const std::vector<double>& levels) {
  double best = levels.front();
  double best_dist = std::abs(x - best);
  for (double l : levels) {
    const double d = std::abs(x - l);
    if (d < best_dist) {
      best = l;
      best_dist = d;
    }
  }
  return best;
}

}  // namespace

std::string to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::kContinuous: return "continuous";
    case ColumnKind::kInteger: return "integer";
    case ColumnKind::kStepped: return "stepped";
    case ColumnKind::kBinary: return "binary";
    case ColumnKind::kCategorical: return "categorical";
  }
  return "continuous";
}

ColumnKind column_kind_from_string(const std::string& s) {
  if (s == "continuous") return ColumnKind::kContinuous;
  if (s == "integer") return ColumnKind::kInteger;
  if (s == "stepped") return ColumnKind::kStepped;
  if (s == "binary") return ColumnKind::kBinary;
  if (s == "categorical") return ColumnKind::kCategorical;
  throw std::invalid_argument("unknown column kind '" + s + "'");
}

std::vector<double> ColumnSpec::levels() const {
  if (kind == ColumnKind::kBinary && allowed_values.empty()) return {0.0, 1.0};
  return allowed_values;
}

std::optional<std::size_t> Schema::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> Schema::names() const {
  std::vector<std::string> out;
  for (const auto& c : columns) out.push_back(c.name);
  return out;
}

void Schema::validate() const {
  if (columns.empty()) throw std::invalid_argument("schema has no columns");
  std::set<std::string> seen;
  for (const auto& c : columns) {
    if (c.name.empty()) throw std::invalid_argument("schema column with empty name");
    if (!seen.insert(c.name).second) throw std::invalid_argument("duplicate column '" + c.name + "'");
    if (c.kind == ColumnKind::kStepped && !(c.step && *c.step > 0.0)) {
      throw std::invalid_argument("stepped column '" + c.name + "' needs a positive step");
    }
    if (c.kind != ColumnKind::kStepped && c.step) {
      throw std::invalid_argument("column '" + c.name + "' has a step but is not stepped");
    }
    if (c.kind == ColumnKind::kCategorical && c.allowed_values.empty()) {
      throw std::invalid_argument("categorical column '" + c.name + "' lists no allowed values");
    }
    if (c.kind == ColumnKind::kBinary && !c.allowed_values.empty() && c.allowed_values.size() != 2) {
      throw std::invalid_argument("binary column '" + c.name + "' must have exactly two values");
    }
    if (c.min && c.max && !(*c.min <= *c.max)) {
      throw std::invalid_argument("column '" + c.name + "' has min above max");
    }
  }
}

Schema schema_from_json(const nlohmann::json& j) {
  Schema schema;
  for (const auto& col : j.at("columns")) {
    ColumnSpec c;
    c.name = col.at("name").get<std::string>();
    c.kind = column_kind_from_string(col.at("kind").get<std::string>());
    if (col.contains("step")) c.step = col.at("step").get<double>();
    if (col.contains("allowed_values")) c.allowed_values = col.at("allowed_values").get<std::vector<double>>();
    c.unit = col.value("unit", std::string{});
    if (col.contains("min")) c.min = col.at("min").get<double>();
    if (col.contains("max")) c.max = col.at("max").get<double>();
    schema.columns.push_back(std::move(c));
  }
  schema.validate();
  return schema;
}

nlohmann::json schema_to_json(const Schema& schema) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : schema.columns) {
    nlohmann::json col{{"name", c.name}, {"kind", to_string(c.kind)}};
    if (c.step) col["step"] = *c.step;
    if (!c.allowed_values.empty()) col["allowed_values"] = c.allowed_values;
    if (!c.unit.empty()) col["unit"] = c.unit;
    if (c.min) col["min"] = *c.min;
    if (c.max) col["max"] = *c.max;
    cols.push_back(std::move(col));
  }
  return {{"columns", cols}};
}

Schema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(LoadError::Kind::kMissingFile, "cannot open schema file '" + path.string() + "'");
  try {
    return schema_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("schema '" + path.string() + "': " + e.what());
  }
}

std::optional<std::string> kind_violation(const ColumnSpec& column, double value) {
  if (!std::isfinite(value)) return "value is not finite";
  if (column.min && value < *column.min) return format_number(value) + " is below " + format_number(*column.min);
  if (column.max && value > *column.max) return format_number(value) + " is above " + format_number(*column.max);
  switch (column.kind) {
    case ColumnKind::kContinuous:
      return std::nullopt;
    case ColumnKind::kInteger:
      if (value != std::round(value)) return format_number(value) + " is not an integer";
      return std::nullopt;
    case ColumnKind::kStepped: {
      const double q = value / *column.step;
      if (std::abs(q - std::round(q)) > kGridTolerance) {
        return format_number(value) + " is not a multiple of " + format_number(*column.step);
      }
      return std::nullopt;
    }
    case ColumnKind::kBinary:
    case ColumnKind::kCategorical: {
      const auto levels = column.levels();
      const bool ok = std::any_of(levels.begin(), levels.end(),
                                  [&](double l) { return std::abs(l - value) <= kGridTolerance; });
      if (!ok) return format_number(value) + " is not an allowed value";
      return std::nullopt;
    }
  }
  return std::nullopt;
}

bool conforms(const Schema& schema, std::span<const double> row) {
  if (row.size() != schema.size()) return false;
  for (std::size_t c = 0; c < row.size(); ++c) {
    if (kind_violation(schema.columns[c], row[c])) return false;
  }
  return true;
}

TabularDataset make_dataset(Schema schema, std::vector<std::vector<double>> rows) {
  schema.validate();
  const std::size_t m = schema.size();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m) {
      throw LoadError(LoadError::Kind::kMissingColumn,
                      "row " + std::to_string(r + 1) + " has " + std::to_string(rows[r].size()) +
                          " cells, expected " + std::to_string(m),
                      r + 1);
    }
    for (std::size_t c = 0; c < m; ++c) {
      if (auto why = kind_violation(schema.columns[c], rows[r][c])) {
        throw LoadError(LoadError::Kind::kKindViolation,
                        "row " + std::to_string(r + 1) + ", column \"" + schema.columns[c].name +
                            "\": " + *why,
                        r + 1, schema.columns[c].name);
      }
    }
  }
  NormStats stats;
  stats.mean.assign(m, 0.0);
  stats.stddev.assign(m, 0.0);
  if (!rows.empty()) {
    const double n = static_cast<double>(rows.size());
    for (std::size_t c = 0; c < m; ++c) {
      double s = 0.0;
      for (const auto& row : rows) s += row[c];
      const double mu = s / n;
      double ss = 0.0;
      for (const auto& row : rows) ss += (row[c] - mu) * (row[c] - mu);
      stats.mean[c] = mu;
      stats.stddev[c] = std::sqrt(ss / n);
      if (rows.size() >= 2 && stats.stddev[c] == 0.0) {
        throw LoadError(LoadError::Kind::kConstantColumn,
                        "column \"" + schema.columns[c].name + "\" is constant", 0,
                        schema.columns[c].name);
      }
    }
  }
  return TabularDataset{std::move(schema), std::move(rows), std::move(stats)};
}

TabularDataset load_csv(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw LoadError(LoadError::Kind::kMissingFile, "cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) {
    throw LoadError(LoadError::Kind::kEmpty, "'" + path.string() + "' has no header line");
  }
  const auto header = split_csv_line(line);
  for (std::size_t c = 0; c < schema.size(); ++c) {
    const auto& name = schema.columns[c].name;
    if (c >= header.size() || header[c] != name) {
      throw LoadError(LoadError::Kind::kMissingColumn,
                      "header of '" + path.string() + "' lacks column \"" + name + "\" at position " +
                          std::to_string(c + 1),
                      0, name);
    }
  }
  if (header.size() != schema.size()) {
    throw LoadError(LoadError::Kind::kMissingColumn,
                    "header of '" + path.string() + "' has unexpected column \"" +
                        header[schema.size()] + "\"",
                    0, header[schema.size()]);
  }
  std::vector<std::vector<double>> rows;
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row_no;
    const auto cells = split_csv_line(line);
    if (cells.size() != schema.size()) {
      throw LoadError(LoadError::Kind::kMissingColumn,
                      "row " + std::to_string(row_no) + " has " + std::to_string(cells.size()) +
                          " cells, expected " + std::to_string(schema.size()),
                      row_no);
    }
    std::vector<double> row(schema.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      auto v = parse_number(cells[c]);
      if (!v) {
        throw LoadError(LoadError::Kind::kUnparseableCell,
                        "row " + std::to_string(row_no) + ", column \"" + schema.columns[c].name +
                            "\": cannot parse '" + cells[c] + "' as a number",
                        row_no, schema.columns[c].name);
      }
      row[c] = *v;
    }
    rows.push_back(std::move(row));
  }
  return make_dataset(schema, std::move(rows));
}

void write_csv(const std::filesystem::path& path, const Schema& schema,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  const auto names = schema.names();
  for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_number(row[c]);
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

FeatureCodec::FeatureCodec(Schema schema, NormStats stats) : schema_(std::move(schema)), stats_(std::move(stats)) {
  schema_.validate();
  if (stats_.mean.size() != schema_.size() || stats_.stddev.size() != schema_.size()) {
    throw std::invalid_argument("norm stats do not match schema width");
  }
  for (const auto& c : schema_.columns) {
    offsets_.push_back(width_);
    width_ += c.kind == ColumnKind::kCategorical ? c.allowed_values.size() : 1;
  }
}

FeatureCodec FeatureCodec::fit(const TabularDataset& ds) {
  for (std::size_t c = 0; c < ds.schema.size(); ++c) {
    if (!(ds.norm_stats.stddev.at(c) > 0.0)) {
      throw LoadError(LoadError::Kind::kConstantColumn,
                      "column \"" + ds.schema.columns[c].name + "\" has no spread; cannot normalize",
                      0, ds.schema.columns[c].name);
    }
  }
  return FeatureCodec(ds.schema, ds.norm_stats);
}

std::vector<double> FeatureCodec::encode(std::span<const double> row) const {
  if (row.size() != schema_.size()) throw std::invalid_argument("row width does not match schema");
  std::vector<double> out(width_, 0.0);
  for (std::size_t c = 0; c < row.size(); ++c) {
    const auto& col = schema_.columns[c];
    if (col.kind == ColumnKind::kCategorical) {
      const double level = nearest_level(row[c], col.allowed_values);
      const auto it = std::find(col.allowed_values.begin(), col.allowed_values.end(), level);
      out[offsets_[c] + static_cast<std::size_t>(it - col.allowed_values.begin())] = 1.0;
    } else {
      out[offsets_[c]] = (row[c] - stats_.mean[c]) / stats_.stddev[c];
    }
  }
  return out;
}

std::vector<double> FeatureCodec::decode(std::span<const double> features) const {
  if (features.size() != width_) throw std::invalid_argument("feature width does not match codec");
  std::vector<double> out(schema_.size());
  for (std::size_t c = 0; c < schema_.size(); ++c) {
    const auto& col = schema_.columns[c];
    if (col.kind == ColumnKind::kCategorical) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < col.allowed_values.size(); ++k) {
        if (features[offsets_[c] + k] > features[offsets_[c] + best]) best = k;
      }
      out[c] = col.allowed_values[best];
    } else {
      out[c] = features[offsets_[c]] * stats_.stddev[c] + stats_.mean[c];
    }
  }
  return out;
}

nlohmann::json FeatureCodec::to_json() const {
  return {{"schema", schema_to_json(schema_)}, {"mean", stats_.mean}, {"stddev", stats_.stddev}};
}

FeatureCodec FeatureCodec::from_json(const nlohmann::json& j) {
  NormStats stats{j.at("mean").get<std::vector<double>>(), j.at("stddev").get<std::vector<double>>()};
  return FeatureCodec(schema_from_json(j.at("schema")), std::move(stats));
}

std::vector<std::vector<double>> normalize(const TabularDataset& ds) {
  const auto codec = FeatureCodec::fit(ds);
  std::vector<std::vector<double>> out;
  out.reserve(ds.size());
  for (const auto& row : ds.rows) out.push_back(codec.encode(row));
  return out;
}

std::vector<std::vector<double>> denormalize(const FeatureCodec& codec,
                                             const std::vector<std::vector<double>>& features) {
  std::vector<std::vector<double>> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(codec.decode(f));
  return out;
}

std::vector<double> round_discrete(std::span<const double> raw, const Schema& schema) {
  if (raw.size() != schema.size()) throw std::invalid_argument("row width does not match schema");
  std::vector<double> out(raw.begin(), raw.end());
  for (std::size_t c = 0; c < out.size(); ++c) {
    const auto& col = schema.columns[c];
    auto clamp = [&](double v) {
      if (col.min) v = std::max(v, *col.min);
      if (col.max) v = std::min(v, *col.max);
      return v;
    };
    out[c] = clamp(out[c]);
    switch (col.kind) {
      case ColumnKind::kContinuous:
        break;
      case ColumnKind::kInteger:
        out[c] = std::round(out[c]);
        break;
      case ColumnKind::kStepped:
        out[c] = std::round(out[c] / *col.step) * *col.step;
        break;
      case ColumnKind::kBinary:
      case ColumnKind::kCategorical:
        out[c] = nearest_level(out[c], col.levels());
        break;
    }
    // Snapping can step past a bound that is not itself on the grid.
    if (col.kind == ColumnKind::kInteger || col.kind == ColumnKind::kStepped) {
      const double step = col.kind == ColumnKind::kStepped ? *col.step : 1.0;
      if (col.min && out[c] < *col.min) out[c] += step;
      if (col.max && out[c] > *col.max) out[c] -= step;
    }
  }
  return out;
}

}  // namespace utg::data
