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

#include "utg/service/session_store.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "utg/data/images.hpp"
#include "utg/data/tabular.hpp"
#include "utg/models/pixelcnn.hpp"
#include "utg/models/vae.hpp"
#include "utg/models/vqvae.hpp"
#include "utg/nn/model_file.hpp"
#include "utg/pipeline/generate.hpp"

namespace utg::service {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string now_iso() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_text(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_atomic(const fs::path& p, const std::string& text) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    os << text;
    os.flush();
    if (!os) throw std::runtime_error("failed writing " + tmp.string());
  }
  fs::rename(tmp, p);
}

void append_line(const fs::path& p, const std::string& line) {
  std::ofstream os(p, std::ios::binary | std::ios::app);
  if (!os) throw std::runtime_error("cannot append to " + p.string());
  os << line << '\n';
}

std::string numbered(const char* prefix, std::size_t n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, n);
  return buf;
}

bool valid_id(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
  });
}

pipeline::GenerationParams default_params(Mode mode) {
  if (mode == Mode::kVaeTabular) return rare::RarityParams{0.0, 1.0};
  return rare::ThresholdParam{1.0};
}

std::string model_kind(const fs::path& p) {
  if (!fs::exists(p)) throw ServiceError(404, "model file not found: " + p.string());
  try {
    return nn::read_model_file(p).kind();
  } catch (const std::exception& e) {
    throw ServiceError(422, "cannot read model " + p.string() + ": " + e.what());
  }
}

fs::path model_path(const json& models, const char* key) {
  if (!models.is_object() || !models.contains(key) || !models.at(key).is_string()) {
    throw ServiceError(422, std::string("request lacks models.") + key);
  }
  return fs::absolute(models.at(key).get<std::string>()).lexically_normal();
}

}  // namespace

std::string to_string(Mode mode) { return mode == Mode::kVaeTabular ? "vae-tabular" : "vqvae-image"; }

Mode mode_from_string(const std::string& s) {
  if (s == "vae-tabular") return Mode::kVaeTabular;
  if (s == "vqvae-image") return Mode::kVqvaeImage;
  throw ServiceError(422, "unknown mode '" + s + "'");
}

json Session::to_json() const {
  return {{"id", id},
          {"mode", to_string(mode)},
          {"models", models},
          {"params", pipeline::params_to_json(params)},
          {"batches", batches},
          {"created", created},
          {"updated", updated}};
}

Session Session::from_json(const json& j) {
  Session s;
  s.id = j.at("id").get<std::string>();
  s.mode = mode_from_string(j.at("mode").get<std::string>());
  s.models = j.at("models");
  s.params = pipeline::params_from_json(j.at("params"));
  s.batches = j.at("batches").get<std::vector<std::string>>();
  s.created = j.at("created").get<std::string>();
  s.updated = j.at("updated").get<std::string>();
  return s;
}

json Batch::header_json() const {
  return {{"id", id}, {"params", pipeline::params_to_json(params)}, {"seed", seed}, {"created", created},
          {"n", records.size()}};
}

json Batch::to_json() const {
  json j = header_json();
  j["records"] = json::array();
  for (const auto& r : records) j["records"].push_back(pipeline::record_to_json(r));
  return j;
}

struct SessionStore::Models {
  std::optional<models::VaeModel> vae;
  std::optional<models::VqVaeModel> vq;
  std::optional<models::PriorModel> prior;
  pipeline::NoveltyIndex reference;
  std::string model_ref;
};

SessionStore::SessionStore(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_);
  for (const auto& entry : fs::directory_iterator(root_)) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_directory() || name.rfind("s-", 0) != 0) continue;
    try {
      next_session_ = std::max<std::size_t>(next_session_, std::stoul(name.substr(2)) + 1);
    } catch (const std::exception&) {
    }
  }
}

SessionStore::~SessionStore() = default;

fs::path SessionStore::session_dir(const std::string& id) const {
  if (!valid_id(id)) throw ServiceError(404, "unknown session '" + id + "'");
  return root_ / id;
}

Session SessionStore::load_session_locked(const std::string& id) const {
  const fs::path p = session_dir(id) / "session.json";
  if (!fs::exists(p)) throw ServiceError(404, "unknown session '" + id + "'");
  return Session::from_json(json::parse(read_text(p)));
}

void SessionStore::save_session_locked(const Session& s) const {
  fs::create_directories(session_dir(s.id) / "batches");
  write_atomic(session_dir(s.id) / "session.json", s.to_json().dump(2) + "\n");
}

Batch SessionStore::load_batch_locked(const std::string& id, const std::string& batch_id) const {
  Session s = load_session_locked(id);
  if (!valid_id(batch_id) || std::find(s.batches.begin(), s.batches.end(), batch_id) == s.batches.end()) {
    throw ServiceError(404, "unknown batch '" + batch_id + "' in session " + id);
  }
  const fs::path dir = session_dir(id) / "batches";
  const json head = json::parse(read_text(dir / (batch_id + ".json")));
  Batch b;
  b.id = batch_id;
  b.params = pipeline::params_from_json(head.at("params"));
  b.seed = head.at("seed").get<std::uint64_t>();
  b.created = head.at("created").get<std::string>();
  b.records = pipeline::from_jsonl(read_text(dir / (batch_id + ".jsonl")));
  return b;
}

void SessionStore::save_batch_records_locked(const std::string& id, const Batch& b) const {
  write_atomic(session_dir(id) / "batches" / (b.id + ".jsonl"), pipeline::to_jsonl(b.records));
}

Session SessionStore::create_session(Mode mode, const json& models) {
  json resolved;
  if (mode == Mode::kVaeTabular) {
    const fs::path vae = model_path(models, "vae");
    if (model_kind(vae) != "vae") throw ServiceError(422, vae.string() + " is not a VAE model");
    resolved = {{"vae", vae.string()}};
  } else {
    const fs::path vq = model_path(models, "vqvae");
    const fs::path prior = model_path(models, "prior");
    if (model_kind(vq) != "vqvae") throw ServiceError(422, vq.string() + " is not a VQ-VAE model");
    if (model_kind(prior) != "prior") throw ServiceError(422, prior.string() + " is not a prior model");
    resolved = {{"vqvae", vq.string()}, {"prior", prior.string()}};
  }
  std::lock_guard lock(mu_);
  Session s;
  s.id = numbered("s-", next_session_++, 6);
  s.mode = mode;
  s.models = resolved;
  s.params = default_params(mode);
  s.created = s.updated = now_iso();
  save_session_locked(s);
  return s;
}

std::vector<Session> SessionStore::list_sessions() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root_)) {
    if (entry.is_directory() && fs::exists(entry.path() / "session.json")) ids.push_back(entry.path().filename().string());
  }
  std::sort(ids.begin(), ids.end());
  std::vector<Session> out;
  for (const auto& id : ids) out.push_back(load_session_locked(id));
  return out;
}

Session SessionStore::get_session(const std::string& id) const {
  std::lock_guard lock(mu_);
  return load_session_locked(id);
}

Session SessionStore::update_params(const std::string& id, const json& params) {
  pipeline::GenerationParams p;
  try {
    p = pipeline::params_from_json(params);
  } catch (const std::exception& e) {
    throw ServiceError(422, std::string("invalid params: ") + e.what());
  }
  std::lock_guard lock(mu_);
  Session s = load_session_locked(id);
  const bool rarity = std::holds_alternative<rare::RarityParams>(p);
  if (rarity != (s.mode == Mode::kVaeTabular)) {
    throw ServiceError(422, rarity ? "image sessions take a threshold t" : "tabular sessions take mu_u and sigma_u");
  }
  s.params = p;
  s.updated = now_iso();
  save_session_locked(s);
  return s;
}

std::shared_ptr<const SessionStore::Models> SessionStore::models_for(const Session& s) {
  {
    std::lock_guard lock(mu_);
    auto it = model_cache_.find(s.id);
    if (it != model_cache_.end()) return it->second;
  }
  auto m = std::make_shared<Models>();
  if (s.mode == Mode::kVaeTabular) {
    const fs::path path = s.models.at("vae").get<std::string>();
    m->vae = models::VaeModel::load(path);
    m->reference = pipeline::reference_from_metadata(*m->vae);
    m->model_ref = path.filename().string();
  } else {
    const fs::path vq_path = s.models.at("vqvae").get<std::string>();
    const fs::path prior_path = s.models.at("prior").get<std::string>();
    m->vq = models::VqVaeModel::load(vq_path);
    m->prior = models::PriorModel::load(prior_path);
    pipeline::check_compatible(*m->vq, *m->prior);
    m->reference = pipeline::reference_from_metadata(*m->vq);
    m->model_ref = vq_path.filename().string() + "+" + prior_path.filename().string();
  }
  std::lock_guard lock(mu_);
  return model_cache_.emplace(s.id, std::move(m)).first->second;
}

Batch SessionStore::generate_batch(const std::string& id, std::size_t n, std::optional<std::uint64_t> seed) {
  Session s;
  {
    std::lock_guard lock(mu_);
    s = load_session_locked(id);
    if (!generating_.insert(id).second) throw ServiceError(409, "a generation is already running for " + id);
  }
  struct Release {
    SessionStore* self;
    std::string id;
    ~Release() {
      std::lock_guard lock(self->mu_);
      self->generating_.erase(id);
    }
  } release{this, id};

  std::shared_ptr<const Models> m;
  try {
    m = models_for(s);
  } catch (const ServiceError&) {
    throw;
  } catch (const std::exception& e) {
    throw ServiceError(422, std::string("cannot load session models: ") + e.what());
  }

  Batch b;
  b.params = s.params;
  b.seed = seed.value_or(s.batches.size() + 1);
  if (s.mode == Mode::kVaeTabular) {
    b.records = pipeline::generate_lu_tabular(*m->vae, m->reference, std::get<rare::RarityParams>(s.params), n, b.seed,
                                              rare::Sampler::kMetropolis, m->model_ref);
  } else {
    b.records = pipeline::generate_lu_images(*m->vq, *m->prior, m->reference, std::get<rare::ThresholdParam>(s.params),
                                             n, b.seed, m->model_ref);
  }

  std::lock_guard lock(mu_);
  s = load_session_locked(id);
  b.id = numbered("b-", s.batches.size() + 1, 4);
  b.created = now_iso();
  const fs::path dir = session_dir(id) / "batches";
  fs::create_directories(dir);
  save_batch_records_locked(id, b);
  write_atomic(dir / (b.id + ".json"), b.header_json().dump(2) + "\n");
  s.batches.push_back(b.id);
  s.updated = b.created;
  save_session_locked(s);
  return b;
}

Batch SessionStore::get_batch(const std::string& id, const std::string& batch_id) const {
  std::lock_guard lock(mu_);
  return load_batch_locked(id, batch_id);
}

pipeline::LuRecord SessionStore::label_sample(const std::string& id, const std::string& batch_id,
                                              const std::string& record_id, const std::string& label,
                                              const std::string& note) {
  pipeline::Label parsed;
  try {
    parsed = pipeline::label_from_string(label);
  } catch (const std::invalid_argument& e) {
    throw ServiceError(422, e.what());
  }
  std::lock_guard lock(mu_);
  Batch b = load_batch_locked(id, batch_id);
  auto it = std::find_if(b.records.begin(), b.records.end(), [&](const auto& r) { return r.id == record_id; });
  if (it == b.records.end()) throw ServiceError(404, "unknown record '" + record_id + "' in batch " + batch_id);
  it->label = parsed;
  it->note = note;
  save_batch_records_locked(id, b);
  const std::string at = now_iso();
  append_line(session_dir(id) / "labels.log",
              json{{"at", at}, {"batch", batch_id}, {"record", record_id}, {"label", label}, {"note", note}}.dump());
  Session s = load_session_locked(id);
  s.updated = at;
  save_session_locked(s);
  return *it;
}

std::string SessionStore::export_session(const std::string& id) const {
  std::lock_guard lock(mu_);
  Session s = load_session_locked(id);
  std::string out;
  for (const auto& bid : s.batches) {
    Batch b = load_batch_locked(id, bid);
    for (const auto& r : b.records) {
      json j = pipeline::record_to_json(r);
      j["batch_id"] = bid;
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

std::vector<std::uint8_t> SessionStore::sample_png(const std::string& id, const std::string& batch_id,
                                                   const std::string& record_id) const {
  std::lock_guard lock(mu_);
  Batch b = load_batch_locked(id, batch_id);
  auto it = std::find_if(b.records.begin(), b.records.end(), [&](const auto& r) { return r.id == record_id; });
  if (it == b.records.end()) throw ServiceError(404, "unknown record '" + record_id + "' in batch " + batch_id);
  if (!it->is_image()) throw ServiceError(422, "record " + record_id + " is not an image");
  std::vector<float> px(it->values.begin(), it->values.end());
  return data::encode_png({it->shape->second, it->shape->first, data::to_bytes(px)});
}

}  // namespace utg::service
