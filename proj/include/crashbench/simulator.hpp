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

#ifndef CRASHBENCH_SIMULATOR_HPP_
#define CRASHBENCH_SIMULATOR_HPP_

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "crashbench/analysis.hpp"
#include "crashbench/exec_backend.hpp"
#include "json.hpp"

namespace crashbench::exec {

// Declarative predicate over a patch and its DiffAnalysis.
//
//   true | false
//   {"touches_file": "net/core/sock.c"}
//   {"touches_function": "net/core/sock.c::sk_free"}
//   {"adds_line_containing": "#error"}
//   {"removes_line_containing": "kfree(skb)"}
//   {"all": [...]}   {"any": [...]}   {"not": rule}
class Rule {
 public:
  Rule() = default;  // never matches
  static Rule constant(bool value);
  static Rule parse(const nlohmann::json& j);

  bool matches(const patch::DiffAnalysis& analysis,
               const patch::Patch& patch) const;
  nlohmann::json to_json() const;

 private:
  enum class Kind {
    kConstant,
    kTouchesFile,
    kTouchesFunction,
    kAddsLine,
    kRemovesLine,
    kAll,
    kAny,
    kNot,
  };
  Kind kind_ = Kind::kConstant;
  bool value_ = false;
  std::string arg_;
  std::vector<Rule> children_;
};

struct SimScenario {
  std::string bug_id;
  Rule compile_predicate;  // matching edits break the build
  Rule fix_predicate;      // matching edits fix the bug
  double crash_prob_unfixed = 1.0;
  double crash_prob_fixed = 0.0;
  std::string crash_report;    // emitted for the unpatched kernel
  std::string mutated_report;  // emitted when a non-empty patch still crashes
  std::string compile_log;

  static SimScenario from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Loads every *.json scenario document in `dir`.
std::vector<SimScenario> load_scenarios(const std::filesystem::path& dir);

// Constant-plus-noise timing and vCPU model for simulated jobs.
struct CostProfile {
  double build_vcpu_seconds = 545.05;
  double vm_vcpu_seconds_per_trial = 57.616;
  double build_latency_seconds = 118.2;          // ~1.97 min
  double reproduction_latency_seconds = 1080.6;  // ~18.01 min on top
  double latency_noise_fraction = 0.1;
};

using TreeResolver =
    std::function<std::shared_ptr<const patch::SourceTree>(const std::string&)>;

// source_ref -> <root>/<source_ref>.
TreeResolver directory_tree_resolver(std::filesystem::path root);

struct SimulatorStats {
  long builds_submitted = 0;
  long build_cache_hits = 0;
  long reproductions_submitted = 0;
};

// Deterministic stand-in for the kernel build-and-boot platform. Results are
// pure functions of (job, scenario, seed); jobs complete before submit
// returns, but callers still go through the asynchronous handle contract.
class Simulator final : public ExecutionBackend {
 public:
  explicit Simulator(TreeResolver trees, CostProfile profile = {});

  void add_scenario(SimScenario scenario);
  bool has_scenario(const std::string& bug_id) const;

  // The next `n` submissions fail with BackendUnavailable.
  void fail_next_submissions(int n) { fail_budget_ = n; }

  JobHandle<BuildResult> submit_build(const BuildJob& job) override;
  JobHandle<ReproductionOutcome> submit_reproduction(
      const ReproductionJob& job) override;

  SimulatorStats stats() const;

 private:
  struct Artifact {
    std::string bug_id;
    bool fixed = false;
    bool empty_patch = true;
  };

  void maybe_fail();
  const SimScenario& scenario_for(const std::string& bug_id) const;

  TreeResolver trees_;
  CostProfile profile_;
  mutable std::mutex mu_;
  std::map<std::string, SimScenario> scenarios_;
  std::map<std::string, JobHandle<BuildResult>> build_cache_;
  std::map<std::string, Artifact> artifacts_;
  SimulatorStats stats_;
  std::atomic<int> fail_budget_{0};
};

}  // namespace crashbench::exec

#endif  // CRASHBENCH_SIMULATOR_HPP_
