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

#include "utg/pipeline/generate.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "utg/rng.hpp"

namespace utg::pipeline {

namespace {

std::string record_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "r%04zu", i);
  return buf;
}

const data::FeatureCodec& codec_of(const models::VaeModel& model) {
  if (!model.codec()) throw std::logic_error("VAE model has no feature codec; train it on a table first");
  return *model.codec();
}

}  // namespace

double novelty_score(std::span<const double> sample, const std::vector<std::vector<double>>& reference) {
  return NoveltyIndex(reference).score(sample);
}

NoveltyIndex::NoveltyIndex(std::vector<std::vector<double>> reference) {
  if (reference.empty()) throw std::invalid_argument("novelty reference set is empty");
  rows_ = reference.size();
  width_ = reference.front().size();
  flat_.reserve(rows_ * width_);
  for (const auto& r : reference) {
    if (r.size() != width_) throw std::invalid_argument("novelty reference rows differ in width");
    flat_.insert(flat_.end(), r.begin(), r.end());
  }
}

NoveltyIndex NoveltyIndex::for_table(const data::TabularDataset& ds, const data::FeatureCodec& codec) {
  std::vector<std::vector<double>> enc;
  enc.reserve(ds.size());
  for (const auto& row : ds.rows) enc.push_back(codec.encode(row));
  return NoveltyIndex(std::move(enc));
}

NoveltyIndex NoveltyIndex::for_images(const data::ImageDataset& ds) {
  std::vector<std::vector<double>> px;
  px.reserve(ds.count);
  for (std::size_t i = 0; i < ds.count; ++i) {
    auto img = ds.image(i);
    px.emplace_back(img.begin(), img.end());
  }
  return NoveltyIndex(std::move(px));
}

double NoveltyIndex::score(std::span<const double> sample) const {
  if (rows_ == 0) throw std::invalid_argument("novelty reference set is empty");
  if (sample.size() != width_) {
    throw std::invalid_argument("sample width " + std::to_string(sample.size()) + " does not match reference width " +
                                std::to_string(width_));
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < rows_; ++r) {
    const double* row = flat_.data() + r * width_;
    double d = 0.0;
    for (std::size_t k = 0; k < width_ && d < best; ++k) d += (sample[k] - row[k]) * (sample[k] - row[k]);
    if (d < best) best = d;
  }
  return std::sqrt(best);
}

NoveltyIndex reference_from_metadata(const models::VaeModel& model) {
  const auto& meta = model.metadata();
  if (!meta.contains("data") || !meta.contains("schema")) {
    throw std::runtime_error("VAE model does not record its training table");
  }
  const auto& codec = codec_of(model);
  auto schema = data::load_schema(meta.at("schema").get<std::string>());
  return NoveltyIndex::for_table(data::load_csv(meta.at("data").get<std::string>(), schema), codec);
}

NoveltyIndex reference_from_metadata(const models::VqVaeModel& model) {
  const auto& meta = model.metadata();
  if (!meta.contains("images")) throw std::runtime_error("VQ-VAE model does not record its training images");
  auto ds = data::load_idx(meta.at("images").get<std::string>());
  if (meta.contains("limit")) ds = ds.head(meta.at("limit").get<std::size_t>());
  return NoveltyIndex::for_images(ds);
}

std::vector<std::vector<double>> decode_tabular(const models::VaeModel& model,
                                                const std::vector<std::vector<double>>& latents) {
  const auto& codec = codec_of(model);
  auto features = model.decode_batch(latents);
  std::vector<std::vector<double>> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(codec.decode(f));
  return out;
}

std::vector<LuRecord> generate_lu_tabular(const models::VaeModel& model, const NoveltyIndex& reference,
                                          const rare::RarityParams& p, std::size_t n, std::uint64_t seed,
                                          rare::Sampler sampler, const std::string& model_ref) {
  p.validate();
  const auto& codec = codec_of(model);
  if (n == 0) return {};
  auto latents = rare::acquire_rare_latents(n, model.latent_dim(), p, sampler, seed);
  auto raw = decode_tabular(model, latents);
  std::vector<LuRecord> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    LuRecord& r = out[i];
    r.id = record_id(i);
    r.params = p;
    r.seed = seed;
    r.values = data::round_discrete(raw[i], codec.schema());
    r.novelty = reference.score(codec.encode(r.values));
    r.latent = std::move(latents[i]);
    r.model_ref = model_ref;
  }
  return out;
}

void check_compatible(const models::VqVaeModel& vq, const models::PriorModel& prior) {
  const auto& a = vq.config();
  const auto& b = prior.config();
  if (a.map_rows != b.map_rows || a.map_cols != b.map_cols || a.codebook_size != b.codebook_size) {
    throw std::invalid_argument("prior geometry " + std::to_string(b.map_rows) + "x" + std::to_string(b.map_cols) +
                                "/V=" + std::to_string(b.codebook_size) + " does not match VQ-VAE " +
                                std::to_string(a.map_rows) + "x" + std::to_string(a.map_cols) +
                                "/V=" + std::to_string(a.codebook_size));
  }
}

ImageLuBatch generate_image_batch(const models::VqVaeModel& vq, const models::PriorModel& prior,
                                  const NoveltyIndex& reference, const std::optional<rare::ThresholdParam>& manipulation,
                                  std::size_t n, std::uint64_t seed, const std::string& model_ref) {
  check_compatible(vq, prior);
  ImageLuBatch batch;
  if (n == 0) return batch;
  std::vector<std::uint64_t> seeds(n);
  for (std::size_t i = 0; i < n; ++i) seeds[i] = derive_seed(seed, i);
  auto gen = models::generate_maps(prior, seeds, manipulation);
  auto images = vq.decode_maps(gen.maps);
  const auto& cfg = vq.config();
  batch.records.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    LuRecord& r = batch.records[i];
    r.id = record_id(i);
    r.params = manipulation.value_or(rare::ThresholdParam{1.0});
    r.seed = seeds[i];
    r.values.assign(images[i].begin(), images[i].end());
    r.shape = std::make_pair(cfg.image_height, cfg.image_width);
    r.novelty = reference.score(r.values);
    r.latent = std::move(gen.maps[i]);
    r.model_ref = model_ref;
  }
  batch.mean_entropy = std::move(gen.mean_entropy);
  return batch;
}

std::vector<LuRecord> generate_lu_images(const models::VqVaeModel& vq, const models::PriorModel& prior,
                                         const NoveltyIndex& reference, const rare::ThresholdParam& t, std::size_t n,
                                         std::uint64_t seed, const std::string& model_ref) {
  return generate_image_batch(vq, prior, reference, t, n, seed, model_ref).records;
}

std::vector<double> redecode(const LuRecord& r, const models::VaeModel& model) {
  const auto& z = std::get<std::vector<double>>(r.latent);
  return data::round_discrete(decode_tabular(model, {z}).front(), codec_of(model).schema());
}

std::vector<double> redecode(const LuRecord& r, const models::VqVaeModel& vq) {
  auto img = models::decode_map(vq, std::get<models::DiscreteLatentMap>(r.latent));
  return std::vector<double>(img.begin(), img.end());
}

}  // namespace utg::pipeline
