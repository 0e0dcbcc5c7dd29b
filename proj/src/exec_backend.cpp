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

#include "crashbench/exec_backend.hpp"

#include "crashbench/digest.hpp"
#include "crashbench/error.hpp"

namespace crashbench::exec {

VcpuUsage& operator+=(VcpuUsage& a, const VcpuUsage& b) {
  for (const auto& [k, v] : b) a[k] += v;
  return a;
}

std::string BuildJob::digest() const {
  nlohmann::json j = *this;
  return sha256_hex(j.dump());
}

int ReproductionOutcome::crash_count() const {
  int n = 0;
  for (bool c : crashed) n += c ? 1 : 0;
  return n;
}

double estimate_job_cost(const VcpuUsage& usage, const Pricing& pricing) {
  double total = 0.0;
  for (const auto& [component, seconds] : usage) {
    auto it = pricing.find(component);
    if (it == pricing.end()) throw MissingPrice(component);
    total += seconds * it->second;
  }
  return total;
}

Pricing calibrate_pricing(const VcpuUsage& reference, const Pricing& relative,
                          double target_total) {
  const double raw = estimate_job_cost(reference, relative);
  if (raw <= 0.0) {
    throw InvalidField("pricing", "relative prices give a zero reference cost");
  }
  Pricing out;
  for (const auto& [k, v] : relative) out[k] = v * target_total / raw;
  return out;
}

VcpuUsage reference_call_usage() {
  return {{kBuilder, 545.05}, {kVmManager, 576.16}};
}

Pricing default_pricing() {
  // Relative weights follow the reference per-component prices; the
  // absolute scale is pinned by the reference per-call total.
  return calibrate_pricing(reference_call_usage(),
                           {{kBuilder, 4.43}, {kVmManager, 1.55}}, 0.28);
}

void to_json(nlohmann::json& j, const BuildJob& v) {
  j = {{"bug_id", v.bug_id},
       {"source_ref", v.source_ref},
       {"patch", v.patch},
       {"config_ref", v.config_ref},
       {"cache_key", v.cache_key ? nlohmann::json(*v.cache_key)
                                 : nlohmann::json(nullptr)}};
}

void from_json(const nlohmann::json& j, BuildJob& v) {
  v.bug_id = j.at("bug_id").get<std::string>();
  v.source_ref = j.at("source_ref").get<std::string>();
  v.patch = j.value("patch", "");
  v.config_ref = j.value("config_ref", "");
  if (j.contains("cache_key") && !j.at("cache_key").is_null()) {
    v.cache_key = j.at("cache_key").get<std::string>();
  } else {
    v.cache_key.reset();
  }
}

void to_json(nlohmann::json& j, const BuildResult& v) {
  j = {{"ok", v.ok},
       {"kernel_artifact_ref", v.kernel_artifact_ref},
       {"log", v.log},
       {"vcpu_seconds", v.vcpu_seconds},
       {"latency_seconds", v.latency_seconds}};
}

void from_json(const nlohmann::json& j, BuildResult& v) {
  v.ok = j.at("ok").get<bool>();
  v.kernel_artifact_ref = j.value("kernel_artifact_ref", "");
  v.log = j.value("log", "");
  v.vcpu_seconds = j.value("vcpu_seconds", VcpuUsage{});
  v.latency_seconds = j.value("latency_seconds", 0.0);
}

void to_json(nlohmann::json& j, const ReproductionJob& v) {
  j = {{"kernel_artifact_ref", v.kernel_artifact_ref},
       {"reproducer_ref", v.reproducer_ref},
       {"trials", v.trials},
       {"seed", v.seed}};
}

void from_json(const nlohmann::json& j, ReproductionJob& v) {
  v.kernel_artifact_ref = j.at("kernel_artifact_ref").get<std::string>();
  v.reproducer_ref = j.value("reproducer_ref", "");
  v.trials = j.at("trials").get<int>();
  v.seed = j.value("seed", std::uint64_t{0});
}

void to_json(nlohmann::json& j, const ReproductionOutcome& v) {
  j = {{"crashed", v.crashed},
       {"crash_report", v.crash_report ? nlohmann::json(*v.crash_report)
                                       : nlohmann::json(nullptr)},
       {"vcpu_seconds", v.vcpu_seconds},
       {"latency_seconds", v.latency_seconds}};
}

void from_json(const nlohmann::json& j, ReproductionOutcome& v) {
  v.crashed = j.at("crashed").get<std::vector<bool>>();
  if (j.contains("crash_report") && !j.at("crash_report").is_null()) {
    v.crash_report = j.at("crash_report").get<std::string>();
  } else {
    v.crash_report.reset();
  }
  v.vcpu_seconds = j.value("vcpu_seconds", VcpuUsage{});
  v.latency_seconds = j.value("latency_seconds", 0.0);
}

}  // namespace crashbench::exec
