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

#include "crashbench/crf.hpp"

#include "crashbench/digest.hpp"
#include "crashbench/error.hpp"
#include "crashbench/patch.hpp"

namespace crashbench::crf {
namespace {

using nlohmann::json;

http::Response json_response(const json& j) {
  http::Response r;
  r.body = j.dump();
  return r;
}

}  // namespace

std::string header(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::kCrashResolved:
      return "CRASH_RESOLVED";
    case VerdictKind::kCrashReproduced:
      return "CRASH_REPRODUCED";
    case VerdictKind::kCompileError:
      return "COMPILE_ERROR";
  }
  return "CRASH_REPRODUCED";
}

std::optional<VerdictKind> verdict_from_header(std::string_view h) {
  if (h == "CRASH_RESOLVED") return VerdictKind::kCrashResolved;
  if (h == "CRASH_REPRODUCED") return VerdictKind::kCrashReproduced;
  if (h == "COMPILE_ERROR") return VerdictKind::kCompileError;
  return std::nullopt;
}

void to_json(json& j, const CRFVerdict& v) {
  j = {{"verdict", header(v.kind)}, {"payload", v.payload},
       {"cost", v.cost},            {"latency_ms", v.latency_ms},
       {"trials", v.trials},        {"crashes", v.crashes}};
}

void from_json(const json& j, CRFVerdict& v) {
  const auto kind = verdict_from_header(j.at("verdict").get<std::string>());
  if (!kind) throw InvalidField("verdict", j.at("verdict").dump());
  v.kind = *kind;
  v.payload = j.value("payload", "");
  v.cost = j.value("cost", 0.0);
  v.latency_ms = j.value("latency_ms", 0.0);
  v.trials = j.value("trials", 0);
  v.crashes = j.value("crashes", 0);
}

std::string format_tool_output(const CRFVerdict& v) {
  std::string out = header(v.kind) + "\n" + v.payload;
  if (!v.payload.empty() && v.payload.back() != '\n') out += "\n";
  return out;
}

Gateway::Gateway(exec::ExecutionBackend& backend, BugLookup bugs,
                 GatewayConfig config)
    : backend_(backend), bugs_(std::move(bugs)), config_(std::move(config)) {
  if (config_.crf_trials < 1) {
    throw InvalidField("crf_trials", "must be at least 1");
  }
}

CRFVerdict Gateway::handle_run_kernel(const CRFRequest& req) {
  const auto bug = bugs_(req.bug_id);
  if (!bug || !bug->curated()) throw UnknownBug(req.bug_id);
  // Validates before anything is submitted; throws DiffSyntaxError.
  patch::parse_unified_diff(req.workspace_diff);

  exec::BuildJob build;
  build.bug_id = bug->bug_id;
  build.source_ref = bug->kernel_commit;
  build.config_ref = bug->kernel_config;
  build.patch = req.workspace_diff;
  const exec::BuildResult built = backend_.submit_build(build).get();

  CRFVerdict v;
  exec::VcpuUsage usage = built.vcpu_seconds;
  double latency_s = built.latency_seconds;
  if (!built.ok) {
    v.kind = VerdictKind::kCompileError;
    v.payload = built.log.empty() ? "error: build failed" : built.log;
  } else {
    exec::ReproductionJob repro;
    repro.kernel_artifact_ref = built.kernel_artifact_ref;
    repro.reproducer_ref = bug->reproducer;
    repro.trials = config_.crf_trials;
    std::uint64_t seed = splitmix64(config_.seed ^ fnv1a64(req.attempt));
    repro.seed = splitmix64(seed ^ fnv1a64(req.workspace_diff));
    const exec::ReproductionOutcome out =
        backend_.submit_reproduction(repro).get();
    exec::operator+=(usage, out.vcpu_seconds);
    latency_s += out.latency_seconds;
    v.trials = repro.trials;
    v.crashes = out.crash_count();
    if (v.crashes == 0) {
      v.kind = VerdictKind::kCrashResolved;
    } else {
      v.kind = VerdictKind::kCrashReproduced;
      v.payload = out.crash_report.value_or("");
      if (v.payload.empty()) v.payload = "kernel crashed";
    }
  }
  v.cost = exec::estimate_job_cost(usage, config_.pricing);
  v.latency_ms = latency_s * 1000.0;

  std::lock_guard<std::mutex> lock(mu_);
  calls_.push_back({req.bug_id, req.attempt,
                    sha256_hex(req.workspace_diff), header(v.kind), v.cost,
                    v.latency_ms});
  return v;
}

std::vector<CallLogEntry> Gateway::calls() const {
  std::lock_guard<std::mutex> lock(mu_);
  return calls_;
}

GatewayServer::GatewayServer(Gateway& gateway) : gateway_(gateway) {
  service_.post("/v1/run_kernel", [this](const http::Request& r) {
    CRFRequest req;
    try {
      const auto body = json::parse(r.body);
      req.bug_id = body.at("bug_id").get<std::string>();
      req.workspace_diff = body.at("diff").get<std::string>();
      const auto& attempt = body.value("attempt", json(""));
      req.attempt = attempt.is_string() ? attempt.get<std::string>()
                                        : attempt.dump();
    } catch (const json::exception& e) {
      return http::error_response(400, "BadRequest", e.what());
    }
    try {
      return json_response(json(gateway_.handle_run_kernel(req)));
    } catch (const UnknownBug& e) {
      return http::error_response(404, e.code(), e.what());
    } catch (const DiffSyntaxError& e) {
      return http::error_response(400, e.code(), e.what());
    } catch (const BackendUnavailable& e) {
      return http::error_response(503, e.code(), e.what());
    } catch (const Error& e) {
      return http::error_response(422, e.code(), e.what());
    }
  });
  service_.get("/v1/health", [](const http::Request&) {
    return json_response({{"status", "ok"}});
  });
  service_.get("/v1/calls", [this](const http::Request&) {
    json arr = json::array();
    for (const auto& c : gateway_.calls()) {
      arr.push_back({{"bug_id", c.bug_id},
                     {"attempt", c.attempt},
                     {"diff_digest", c.diff_digest},
                     {"verdict", c.verdict},
                     {"cost", c.cost},
                     {"latency_ms", c.latency_ms}});
    }
    return json_response(arr);
  });
}

int GatewayServer::start(const std::string& host, int port) {
  return service_.start(host, port);
}

CRFVerdict call_gateway(const std::string& base_url, const CRFRequest& req) {
  const json body = {{"bug_id", req.bug_id},
                     {"diff", req.workspace_diff},
                     {"attempt", req.attempt}};
  auto res = http::post_json(base_url, "/v1/run_kernel", body.dump(),
                             std::chrono::seconds(3600));
  if (!res) throw BackendUnavailable("cannot reach gateway at " + base_url);
  if (res->status != 200) {
    std::string code = "GatewayError";
    std::string message = res->body;
    try {
      const auto j = json::parse(res->body);
      code = j.value("error", code);
      message = j.value("message", message);
    } catch (const json::exception&) {
    }
    if (code == "UnknownBug") throw UnknownBug(req.bug_id);
    if (code == "BackendUnavailable") throw BackendUnavailable(message);
    throw Error(code, message);
  }
  return json::parse(res->body).get<CRFVerdict>();
}

}  // namespace crashbench::crf
