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

#include <memory>
#include <string>

#include "utg/service/session_store.hpp"

namespace utg::service {

/// HTTP front end over a SessionStore.
///
///   POST  /sessions                                        {"mode", "models"}
///   GET   /sessions
///   GET   /sessions/{id}
///   PATCH /sessions/{id}/params                            {"mu_u","sigma_u"} | {"t"}
///   POST  /sessions/{id}/batches                           {"n", "seed"?}
///   GET   /sessions/{id}/batches/{bid}
///   GET   /sessions/{id}/batches/{bid}/samples/{sid}/image
///   POST  /sessions/{id}/batches/{bid}/samples/{sid}/label {"label", "note"?}
///   GET   /sessions/{id}/export
///   GET   /healthz
///
/// Errors are JSON bodies {"error": message} with the ServiceError status;
/// malformed request bodies get 400.
class HttpServer {
 public:
  explicit HttpServer(SessionStore& store);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds the listening socket; port 0 picks a free port. Returns the bound
  /// port, or -1 if the address is unavailable.
  int bind(const std::string& host, int port);
  /// Serves until stop(); returns false if the server failed.
  bool listen();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace utg::service
