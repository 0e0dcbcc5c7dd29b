// Copyright 2026 The Crashbench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "crashbench/http.hpp"

#include <stdexcept>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace crashbench::http {

struct Service::Impl {
  httplib::Server server;
  std::thread thread;
};

namespace {

httplib::Server::Handler adapt(Handler handler) {
  return [handler = std::move(handler)](const httplib::Request& req,
                                        httplib::Response& res) {
    Request r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.params.emplace(k, v);
    r.body = req.body;
    for (const auto& m : req.matches) r.matches.push_back(m.str());
    Response out;
    try {
      out = handler(r);
    } catch (const std::exception& e) {
      out = error_response(500, "InternalError", e.what());
    }
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
}

}  // namespace

Service::Service() : impl_(std::make_unique<Impl>()) {}

Service::~Service() { stop(); }

void Service::get(const std::string& pattern, Handler handler) {
  impl_->server.Get(pattern, adapt(std::move(handler)));
}

void Service::post(const std::string& pattern, Handler handler) {
  impl_->server.Post(pattern, adapt(std::move(handler)));
}

int Service::start(const std::string& host, int port) {
  host_ = host;
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
  } else {
    port_ = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (port_ <= 0) throw std::runtime_error("cannot bind " + host);
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void Service::run(const std::string& host, int port) {
  host_ = host;
  port_ = port;
  if (!impl_->server.listen(host, port)) {
    throw std::runtime_error("cannot listen on " + host + ":" +
                             std::to_string(port));
  }
}

void Service::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string Service::base_url() const {
  return "http://" + host_ + ":" + std::to_string(port_);
}

std::optional<ClientResult> get(const std::string& base_url,
                                const std::string& path,
                                std::chrono::seconds timeout) {
  httplib::Client cli(base_url);
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  auto res = cli.Get(path);
  if (!res) return std::nullopt;
  return ClientResult{res->status, res->body};
}

std::optional<ClientResult> post_json(const std::string& base_url,
                                      const std::string& path,
                                      const std::string& body,
                                      std::chrono::seconds timeout) {
  httplib::Client cli(base_url);
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  auto res = cli.Post(path, body, "application/json");
  if (!res) return std::nullopt;
  return ClientResult{res->status, res->body};
}

Response error_response(int status, const std::string& code,
                        const std::string& message) {
  Response r;
  r.status = status;
  r.body = nlohmann::json{{"error", code}, {"message", message}}.dump();
  return r;
}

}  // namespace crashbench::http
