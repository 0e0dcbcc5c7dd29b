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

#ifndef CRASHBENCH_INVOKER_HPP_
#define CRASHBENCH_INVOKER_HPP_

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "crashbench/env.hpp"
#include "crashbench/error.hpp"
#include "json.hpp"

namespace crashbench::env {

class WorkspaceInitFailed : public Error {
 public:
  explicit WorkspaceInitFailed(const std::string& why)
      : Error("WorkspaceInitFailed", why) {}
};

class SandboxError : public Error {
 public:
  explicit SandboxError(const std::string& why) : Error("SandboxError", why) {}
};

enum class ExitStatus { kCompleted, kTimeout, kBudgetExceeded, kCrashed };

std::string to_string(ExitStatus s);
ExitStatus exit_status_from_string(const std::string& s);

// Event kinds the invoker interprets. Anything else is kept verbatim.
inline constexpr const char* kCostEvent = "cost";    // payload.usd
inline constexpr const char* kStepEvent = "step";
inline constexpr const char* kCrfEvent = "crf_call";

struct TrajectoryEvent {
  double t = 0.0;  // seconds since the agent started
  std::string kind;
  nlohmann::json payload;

  friend bool operator==(const TrajectoryEvent&,
                         const TrajectoryEvent&) = default;
};

struct AgentRunArtifact {
  std::string bug_id;
  std::string agent_name;
  int attempt_index = 1;
  std::string patch;
  double dollar_cost = 0.0;
  double wall_time_seconds = 0.0;
  std::vector<TrajectoryEvent> trajectory;
  ExitStatus exit_status = ExitStatus::kCompleted;
  std::optional<int> exit_code;
  std::string limit_hit;  // which limit ended the run, if any

  long crf_calls() const;
};

void to_json(nlohmann::json& j, const TrajectoryEvent& v);
void from_json(const nlohmann::json& j, TrajectoryEvent& v);
void to_json(nlohmann::json& j, const AgentRunArtifact& v);
void from_json(const nlohmann::json& j, AgentRunArtifact& v);

struct Limits {
  std::optional<double> budget_usd;
  std::optional<long> step_limit;
  std::optional<double> time_limit_seconds = 7200.0;
};

struct InvokerConfig {
  std::filesystem::path trees_root;    // <trees_root>/<source_ref>
  std::filesystem::path sandbox_root;  // one subdirectory per invocation
  std::filesystem::path run_kernel_binary;
  std::string gateway_url;
  std::chrono::milliseconds poll_interval{20};
  bool keep_sandbox = false;
};

// Parses trajectory.jsonl content; malformed lines become "invalid" events.
std::vector<TrajectoryEvent> parse_trajectory(std::string_view jsonl);

// Runs the composed environment's invocation command against a fresh copy of
// the source tree. The sandbox layout seen by the agent:
//
//   workspace/         editable checkout of source_ref
//   baseline/          pristine copy used by run_kernel to compute the diff
//   bin/run_kernel     feedback tool (when enabled), first on PATH
//   crash_context.md   argument 1
//   trajectory.jsonl   append-only event log
//
// The workspace path is argument 2. The patch is always computed by diffing
// the final workspace against an in-memory snapshot taken before launch.
AgentRunArtifact invoke_agent(const EnvironmentSpec& spec, const Limits& limits,
                              int attempt_index, const InvokerConfig& config);

}  // namespace crashbench::env

#endif  // CRASHBENCH_INVOKER_HPP_
