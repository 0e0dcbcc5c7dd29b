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

#ifndef CRASHBENCH_EXEC_BACKEND_HPP_
#define CRASHBENCH_EXEC_BACKEND_HPP_

#include <chrono>
#include <cstdint>
#include <future>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace crashbench::exec {

inline constexpr const char* kBuilder = "builder";
inline constexpr const char* kVmManager = "vm_manager";

// vCPU-seconds per platform component.
using VcpuUsage = std::map<std::string, double>;
// Price per vCPU-second per component.
using Pricing = std::map<std::string, double>;

VcpuUsage& operator+=(VcpuUsage& a, const VcpuUsage& b);

// Asynchronous job handle. Copies share the same underlying job; get()
// rethrows whatever error the job ended with.
template <typename T>
class JobHandle {
 public:
  JobHandle() = default;
  JobHandle(std::string id, std::shared_future<T> result)
      : id_(std::move(id)), result_(std::move(result)) {}

  const std::string& id() const { return id_; }
  bool valid() const { return result_.valid(); }
  bool ready() const {
    return result_.wait_for(std::chrono::seconds(0)) ==
           std::future_status::ready;
  }
  template <typename Rep, typename Period>
  bool wait_for(std::chrono::duration<Rep, Period> d) const {
    return result_.wait_for(d) == std::future_status::ready;
  }
  const T& get() const { return result_.get(); }

  static JobHandle completed(std::string id, T value) {
    std::promise<T> p;
    p.set_value(std::move(value));
    return JobHandle(std::move(id), p.get_future().share());
  }

 private:
  std::string id_;
  std::shared_future<T> result_;
};

struct BuildJob {
  std::string bug_id;
  std::string source_ref;
  std::string patch;  // unified diff against source_ref; may be empty
  std::string config_ref;
  std::optional<std::string> cache_key;

  std::string digest() const;
};

struct BuildResult {
  bool ok = false;
  std::string kernel_artifact_ref;  // set when ok
  std::string log;                  // compiler log when !ok
  VcpuUsage vcpu_seconds;
  double latency_seconds = 0.0;

  friend bool operator==(const BuildResult&, const BuildResult&) = default;
};

struct ReproductionJob {
  std::string kernel_artifact_ref;
  std::string reproducer_ref;
  int trials = 1;
  std::uint64_t seed = 0;
};

struct ReproductionOutcome {
  std::vector<bool> crashed;                 // one flag per trial
  std::optional<std::string> crash_report;   // first crashing trial's report
  VcpuUsage vcpu_seconds;
  double latency_seconds = 0.0;

  int crash_count() const;
  friend bool operator==(const ReproductionOutcome&,
                         const ReproductionOutcome&) = default;
};

class ExecutionBackend {
 public:
  virtual ~ExecutionBackend() = default;
  virtual JobHandle<BuildResult> submit_build(const BuildJob& job) = 0;
  virtual JobHandle<ReproductionOutcome> submit_reproduction(
      const ReproductionJob& job) = 0;
};

// Σ vcpu_seconds(component) × price(component). Throws MissingPrice.
double estimate_job_cost(const VcpuUsage& usage, const Pricing& pricing);

// Scales relative component prices so that `reference` costs exactly
// `target_total`.
Pricing calibrate_pricing(const VcpuUsage& reference, const Pricing& relative,
                          double target_total);

// Per-call averages of the reference platform, with prices calibrated to
// $0.28 per feedback call.
VcpuUsage reference_call_usage();
Pricing default_pricing();

void to_json(nlohmann::json& j, const BuildJob& v);
void from_json(const nlohmann::json& j, BuildJob& v);
void to_json(nlohmann::json& j, const BuildResult& v);
void from_json(const nlohmann::json& j, BuildResult& v);
void to_json(nlohmann::json& j, const ReproductionJob& v);
void from_json(const nlohmann::json& j, ReproductionJob& v);
void to_json(nlohmann::json& j, const ReproductionOutcome& v);
void from_json(const nlohmann::json& j, ReproductionOutcome& v);

}  // namespace crashbench::exec

#endif  // CRASHBENCH_EXEC_BACKEND_HPP_
