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

#include "utg/service/http_api.hpp"

#include <httplib.h>

namespace utg::service {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  auto j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ServiceError(400, "request body must be a JSON object");
  return j;
}

template <class Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const ServiceError& e) {
      send_json(res, e.status(), {{"error", e.what()}});
    } catch (const json::exception& e) {
      send_json(res, 400, {{"error", std::string("bad request: ") + e.what()}});
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", e.what()}});
    }
  };
}

}  // namespace

struct HttpServer::Impl {
  SessionStore& store;
  httplib::Server server;

  explicit Impl(SessionStore& s) : store(s) { routes(); }

  void routes() {
    server.Get("/healthz", guarded([](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"status", "ok"}});
    }));

    server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      if (!body.contains("mode") || !body.at("mode").is_string()) throw ServiceError(422, "request lacks mode");
      const Mode mode = mode_from_string(body.at("mode").get<std::string>());
      send_json(res, 201, store.create_session(mode, body.value("models", json::object())).to_json());
    }));

    server.Get("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
      json out = json::array();
      for (const auto& s : store.list_sessions()) out.push_back(s.to_json());
      send_json(res, 200, out);
    }));

    server.Get(R"(/sessions/([a-z0-9-]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, store.get_session(req.matches[1]).to_json());
    }));

    server.Patch(R"(/sessions/([a-z0-9-]+)/params)",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                   send_json(res, 200, store.update_params(req.matches[1], parse_body(req)).to_json());
                 }));

    server.Post(R"(/sessions/([a-z0-9-]+)/batches)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = parse_body(req);
                  const auto n = body.value("n", 100);
                  if (n < 0 || n > 10000) throw ServiceError(422, "n must lie in [0, 10000]");
                  std::optional<std::uint64_t> seed;
                  if (body.contains("seed")) seed = body.at("seed").get<std::uint64_t>();
                  send_json(res, 201, store.generate_batch(req.matches[1], static_cast<std::size_t>(n), seed).to_json());
                }));

    server.Get(R"(/sessions/([a-z0-9-]+)/batches/([a-z0-9-]+))",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, 200, store.get_batch(req.matches[1], req.matches[2]).to_json());
               }));

    server.Get(R"(/sessions/([a-z0-9-]+)/batches/([a-z0-9-]+)/samples/([a-z0-9-]+)/image)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 auto png = store.sample_png(req.matches[1], req.matches[2], req.matches[3]);
                 res.status = 200;
                 res.set_content(std::string(png.begin(), png.end()), "image/png");
               }));

    server.Post(R"(/sessions/([a-z0-9-]+)/batches/([a-z0-9-]+)/samples/([a-z0-9-]+)/label)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = parse_body(req);
                  if (!body.contains("label") || !body.at("label").is_string()) {
                    throw ServiceError(422, "request lacks label");
                  }
                  auto rec = store.label_sample(req.matches[1], req.matches[2], req.matches[3],
                                                body.at("label").get<std::string>(), body.value("note", std::string{}));
                  send_json(res, 200, pipeline::record_to_json(rec));
                }));

    server.Get(R"(/sessions/([a-z0-9-]+)/export)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      res.status = 200;
      res.set_content(store.export_session(req.matches[1]), "application/x-ndjson");
    }));

    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) send_json(res, res.status, {{"error", "not found"}});
    });
  }
};

HttpServer::HttpServer(SessionStore& store) : impl_(std::make_unique<Impl>(store)) {}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

bool HttpServer::running() const { return impl_->server.is_running(); }

}  // namespace utg::service
