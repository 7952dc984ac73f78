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
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "utg/pipeline/records.hpp"

namespace utg::service {

/// Failure carrying the HTTP status it maps to.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, const std::string& message) : std::runtime_error(message), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

enum class Mode { kVaeTabular, kVqvaeImage };

std::string to_string(Mode mode);
/// Throws ServiceError(422) on an unknown mode.
Mode mode_from_string(const std::string& s);

struct Session {
  std::string id;
  Mode mode = Mode::kVaeTabular;
  /// {"vae": path} or {"vqvae": path, "prior": path}.
  nlohmann::json models;
  pipeline::GenerationParams params;
  std::vector<std::string> batches;
  std::string created;
  std::string updated;

  nlohmann::json to_json() const;
  static Session from_json(const nlohmann::json& j);
};

struct Batch {
  std::string id;
  pipeline::GenerationParams params;
  std::uint64_t seed = 0;
  std::string created;
  std::vector<pipeline::LuRecord> records;

  /// Metadata only; records travel separately as JSONL.
  nlohmann::json header_json() const;
  nlohmann::json to_json() const;
};

/// Directory-per-session persistence:
///
///   <root>/<session>/session.json
///   <root>/<session>/batches/<batch>.json    (params, seed, created)
///   <root>/<session>/batches/<batch>.jsonl   (records)
///   <root>/<session>/labels.log              (append-only label audit)
///
/// Every mutation is written through before the call returns, using
/// write-to-temp and rename.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path root);
  ~SessionStore();

  const std::filesystem::path& root() const noexcept { return root_; }

  /// Throws ServiceError 404 for a missing model file, 422 when a model's
  /// kind does not fit the mode.
  Session create_session(Mode mode, const nlohmann::json& models);
  std::vector<Session> list_sessions() const;
  Session get_session(const std::string& id) const;
  /// Throws ServiceError 422 for params invalid for the session's mode.
  Session update_params(const std::string& id, const nlohmann::json& params);
  /// Runs the pipeline with the session's current params. The default seed
  /// is the new batch's 1-based position. Throws ServiceError 409 while
  /// another generation for the same session is in flight.
  Batch generate_batch(const std::string& id, std::size_t n, std::optional<std::uint64_t> seed);
  Batch get_batch(const std::string& id, const std::string& batch_id) const;
  pipeline::LuRecord label_sample(const std::string& id, const std::string& batch_id, const std::string& record_id,
                                  const std::string& label, const std::string& note);
  /// Every record of every batch in batch order, one JSON object per line,
  /// each tagged with its batch id.
  std::string export_session(const std::string& id) const;
  std::vector<std::uint8_t> sample_png(const std::string& id, const std::string& batch_id,
                                       const std::string& record_id) const;

 private:
  struct Models;

  std::filesystem::path session_dir(const std::string& id) const;
  Session load_session_locked(const std::string& id) const;
  void save_session_locked(const Session& s) const;
  Batch load_batch_locked(const std::string& id, const std::string& batch_id) const;
  void save_batch_records_locked(const std::string& id, const Batch& b) const;
  std::shared_ptr<const Models> models_for(const Session& s);

  std::filesystem::path root_;
  mutable std::mutex mu_;
  std::set<std::string> generating_;
  std::map<std::string, std::shared_ptr<const Models>> model_cache_;
  std::size_t next_session_ = 1;
};

}  // namespace utg::service
