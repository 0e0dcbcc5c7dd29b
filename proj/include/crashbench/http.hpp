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

#ifndef CRASHBENCH_HTTP_HPP_
#define CRASHBENCH_HTTP_HPP_

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace crashbench::http {

struct Request {
  std::string method;
  std::string path;
  std::multimap<std::string, std::string> params;
  std::string body;
  std::vector<std::string> matches;  // regex captures, [0] = whole path
};

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

using Handler = std::function<Response(const Request&)>;

// Threaded HTTP listener. Handlers run on the server's worker threads.
class Service {
 public:
  Service();
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  void get(const std::string& pattern, Handler handler);
  void post(const std::string& pattern, Handler handler);

  // Binds (port 0 picks a free port) and starts serving in the background.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Blocks in the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

  int port() const { return port_; }
  std::string base_url() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string host_;
  int port_ = 0;
};

struct ClientResult {
  int status = 0;
  std::string body;
};

// Both return nullopt when the server cannot be reached.
std::optional<ClientResult> get(const std::string& base_url,
                                const std::string& path,
                                std::chrono::seconds timeout =
                                    std::chrono::seconds(30));
std::optional<ClientResult> post_json(const std::string& base_url,
                                      const std::string& path,
                                      const std::string& body,
                                      std::chrono::seconds timeout =
                                          std::chrono::seconds(30));

// JSON error body used by every endpoint: {"error": code, "message": text}.
Response error_response(int status, const std::string& code,
                        const std::string& message);

}  // namespace crashbench::http

#endif  // CRASHBENCH_HTTP_HPP_
