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

#ifndef CRASHBENCH_CRF_HPP_
#define CRASHBENCH_CRF_HPP_

#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "crashbench/corpus.hpp"
#include "crashbench/exec_backend.hpp"
#include "crashbench/http.hpp"
#include "json.hpp"

namespace crashbench::crf {

enum class VerdictKind { kCrashResolved, kCrashReproduced, kCompileError };

// Bit-exact first line of the tool output.
std::string header(VerdictKind kind);
std::optional<VerdictKind> verdict_from_header(std::string_view header);

struct CRFRequest {
  std::string bug_id;
  std::string workspace_diff;
  std::string attempt;
};

struct CRFVerdict {
  VerdictKind kind = VerdictKind::kCrashReproduced;
  std::string payload;  // crash report or compiler log; empty when resolved
  double cost = 0.0;
  double latency_ms = 0.0;
  int trials = 0;  // reproduction trials actually run (0 on compile errors)
  int crashes = 0;

  friend bool operator==(const CRFVerdict&, const CRFVerdict&) = default;
};

void to_json(nlohmann::json& j, const CRFVerdict& v);
void from_json(const nlohmann::json& j, CRFVerdict& v);

// Header line, newline, payload.
std::string format_tool_output(const CRFVerdict& v);

struct CallLogEntry {
  std::string bug_id;
  std::string attempt;
  std::string diff_digest;
  std::string verdict;
  double cost = 0.0;
  double latency_ms = 0.0;
};

using BugLookup =
    std::function<std::optional<corpus::BugRecord>(const std::string&)>;

struct GatewayConfig {
  int crf_trials = 10;
  std::uint64_t seed = 0;
  exec::Pricing pricing = exec::default_pricing();
};

// Stateless apart from the call log. Errors: UnknownBug, DiffSyntaxError,
// BackendUnavailable.
class Gateway {
 public:
  Gateway(exec::ExecutionBackend& backend, BugLookup bugs,
          GatewayConfig config = {});

  CRFVerdict handle_run_kernel(const CRFRequest& req);

  std::vector<CallLogEntry> calls() const;
  const GatewayConfig& config() const { return config_; }

 private:
  exec::ExecutionBackend& backend_;
  BugLookup bugs_;
  GatewayConfig config_;
  mutable std::mutex mu_;
  std::vector<CallLogEntry> calls_;
};

// POST /v1/run_kernel {bug_id, diff, attempt}
//   -> {verdict, payload, cost, latency_ms, trials, crashes}
class GatewayServer {
 public:
  explicit GatewayServer(Gateway& gateway);
  int start(const std::string& host = "127.0.0.1", int port = 0);
  void run(const std::string& host, int port) { service_.run(host, port); }
  void stop() { service_.stop(); }
  std::string base_url() const { return service_.base_url(); }

 private:
  Gateway& gateway_;
  http::Service service_;
};

// Client used by the in-environment tool. Structured gateway errors are
// rethrown as crashbench::Error with the server's code.
CRFVerdict call_gateway(const std::string& base_url, const CRFRequest& req);

}  // namespace crashbench::crf

#endif  // CRASHBENCH_CRF_HPP_
