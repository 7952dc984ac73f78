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

#include "utg/pipeline/records.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "utg/data/images.hpp"

namespace utg::pipeline {

std::string to_string(Label label) {
  switch (label) {
    case Label::kUnlabeled: return "unlabeled";
    case Label::kSupposable: return "supposable";
    case Label::kUnsupposable: return "unsupposable";
    case Label::kUnreal: return "unreal";
  }
  return "unlabeled";
}

Label label_from_string(const std::string& s) {
  if (s == "unlabeled") return Label::kUnlabeled;
  if (s == "supposable") return Label::kSupposable;
  if (s == "unsupposable") return Label::kUnsupposable;
  if (s == "unreal") return Label::kUnreal;
  throw std::invalid_argument("unknown label '" + s + "'");
}

nlohmann::json params_to_json(const GenerationParams& p) {
  if (const auto* r = std::get_if<rare::RarityParams>(&p)) return {{"mu_u", r->mu_u}, {"sigma_u", r->sigma_u}};
  return {{"t", std::get<rare::ThresholdParam>(p).t}};
}

GenerationParams params_from_json(const nlohmann::json& j) {
  if (j.contains("t")) {
    rare::ThresholdParam t{j.at("t").get<double>()};
    t.validate();
    return t;
  }
  rare::RarityParams r{j.at("mu_u").get<double>(), j.at("sigma_u").get<double>()};
  r.validate();
  return r;
}

nlohmann::json record_to_json(const LuRecord& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["params"] = params_to_json(r.params);
  j["seed"] = r.seed;
  if (const auto* z = std::get_if<std::vector<double>>(&r.latent)) {
    j["latent"] = *z;
  } else {
    const auto& m = std::get<models::DiscreteLatentMap>(r.latent);
    j["latent"] = {{"rows", m.rows}, {"cols", m.cols}, {"indices", m.indices}};
  }
  j["values"] = r.values;
  if (r.shape) j["shape"] = {r.shape->first, r.shape->second};
  j["novelty"] = r.novelty;
  j["label"] = to_string(r.label);
  j["note"] = r.note;
  j["model_ref"] = r.model_ref;
  return j;
}

LuRecord record_from_json(const nlohmann::json& j) {
  LuRecord r;
  r.id = j.at("id").get<std::string>();
  r.params = params_from_json(j.at("params"));
  r.seed = j.at("seed").get<std::uint64_t>();
  const auto& lat = j.at("latent");
  if (lat.is_array()) {
    r.latent = lat.get<std::vector<double>>();
  } else {
    models::DiscreteLatentMap m{lat.at("rows").get<std::size_t>(), lat.at("cols").get<std::size_t>(),
                                lat.at("indices").get<std::vector<std::int32_t>>()};
    if (m.indices.size() != m.rows * m.cols) throw std::invalid_argument("latent map indices do not match its shape");
    r.latent = std::move(m);
  }
  r.values = j.at("values").get<std::vector<double>>();
  if (j.contains("shape")) {
    auto s = j.at("shape").get<std::vector<std::size_t>>();
    if (s.size() != 2 || s[0] * s[1] != r.values.size()) throw std::invalid_argument("image shape does not match values");
    r.shape = std::make_pair(s[0], s[1]);
  }
  r.novelty = j.at("novelty").get<double>();
  r.label = label_from_string(j.value("label", std::string("unlabeled")));
  r.note = j.value("note", std::string{});
  r.model_ref = j.value("model_ref", std::string{});
  return r;
}

std::string to_jsonl(const std::vector<LuRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

std::vector<LuRecord> from_jsonl(const std::string& text) {
  std::vector<LuRecord> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    out.push_back(record_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<LuRecord>& records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << to_jsonl(records);
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

std::vector<LuRecord> read_jsonl(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return from_jsonl(ss.str());
}

void write_csv_projection(const std::filesystem::path& path, const data::Schema& schema,
                          const std::vector<LuRecord>& records) {
  std::vector<std::vector<double>> rows;
  rows.reserve(records.size());
  for (const auto& r : records) {
    if (r.is_image() || r.values.size() != schema.size()) {
      throw std::invalid_argument("record " + r.id + " is not a row of this schema");
    }
    rows.push_back(r.values);
  }
  data::write_csv(path, schema, rows);
}

namespace {

std::vector<float> image_of(const LuRecord& r) {
  if (!r.is_image()) throw std::invalid_argument("record " + r.id + " is not an image");
  return std::vector<float>(r.values.begin(), r.values.end());
}

}  // namespace

void write_image_records(const std::filesystem::path& dir, const std::vector<LuRecord>& records) {
  std::filesystem::create_directories(dir);
  for (const auto& r : records) {
    auto px = image_of(r);
    data::write_png(dir / (r.id + ".png"), {r.shape->second, r.shape->first, data::to_bytes(px)});
  }
  write_jsonl(dir / "records.jsonl", records);
}

void write_image_grid(const std::filesystem::path& path, const std::vector<LuRecord>& records, std::size_t columns) {
  if (records.empty()) throw std::invalid_argument("no images to tile");
  std::vector<std::vector<float>> images;
  for (const auto& r : records) images.push_back(image_of(r));
  const auto [h, w] = *records.front().shape;
  data::write_png(path, data::tile_images(images, h, w, columns));
}

}  // namespace utg::pipeline
