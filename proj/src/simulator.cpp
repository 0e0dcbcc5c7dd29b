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

#include "crashbench/simulator.hpp"

#include <algorithm>
#include <fstream>

#include "crashbench/digest.hpp"
#include "crashbench/error.hpp"

namespace crashbench::exec {
namespace {

bool any_line(const patch::Patch& p, patch::LineKind kind,
              const std::string& needle) {
  for (const auto& d : p.files) {
    for (const auto& h : d.hunks) {
      for (const auto& l : h.lines) {
        if (l.kind == kind && l.text.find(needle) != std::string::npos) {
          return true;
        }
      }
    }
  }
  return false;
}

double check_probability(const nlohmann::json& j, const char* key,
                         double fallback) {
  const double p = j.value(key, fallback);
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InvalidField(key, "probability must lie in [0, 1]");
  }
  return p;
}

double noisy(double base, double noise_fraction, double u) {
  return base * (1.0 + noise_fraction * (2.0 * u - 1.0));
}

}  // namespace

Rule Rule::constant(bool value) {
  Rule r;
  r.kind_ = Kind::kConstant;
  r.value_ = value;
  return r;
}

Rule Rule::parse(const nlohmann::json& j) {
  if (j.is_boolean()) return constant(j.get<bool>());
  if (!j.is_object() || j.size() != 1) {
    throw InvalidField("rule", "expected a boolean or single-key object: " +
                                   j.dump());
  }
  const auto& [key, value] = *j.items().begin();
  Rule r;
  auto string_arg = [&](Kind kind) {
    if (!value.is_string()) throw InvalidField("rule." + key, "expected string");
    r.kind_ = kind;
    r.arg_ = value.get<std::string>();
  };
  if (key == "touches_file") {
    string_arg(Kind::kTouchesFile);
  } else if (key == "touches_function") {
    string_arg(Kind::kTouchesFunction);
  } else if (key == "adds_line_containing") {
    string_arg(Kind::kAddsLine);
  } else if (key == "removes_line_containing") {
    string_arg(Kind::kRemovesLine);
  } else if (key == "all" || key == "any") {
    if (!value.is_array()) throw InvalidField("rule." + key, "expected array");
    r.kind_ = key == "all" ? Kind::kAll : Kind::kAny;
    for (const auto& c : value) r.children_.push_back(parse(c));
  } else if (key == "not") {
    r.kind_ = Kind::kNot;
    r.children_.push_back(parse(value));
  } else {
    throw InvalidField("rule", "unknown rule '" + key + "'");
  }
  return r;
}

bool Rule::matches(const patch::DiffAnalysis& a, const patch::Patch& p) const {
  switch (kind_) {
    case Kind::kConstant:
      return value_;
    case Kind::kTouchesFile:
      return a.modified_files.count(arg_) > 0;
    case Kind::kTouchesFunction:
      return a.modified_functions.count(arg_) > 0;
    case Kind::kAddsLine:
      return any_line(p, patch::LineKind::kAdded, arg_);
    case Kind::kRemovesLine:
      return any_line(p, patch::LineKind::kRemoved, arg_);
    case Kind::kAll:
      return std::all_of(children_.begin(), children_.end(),
                         [&](const Rule& c) { return c.matches(a, p); });
    case Kind::kAny:
      return std::any_of(children_.begin(), children_.end(),
                         [&](const Rule& c) { return c.matches(a, p); });
    case Kind::kNot:
      return !children_.front().matches(a, p);
  }
  return false;
}

nlohmann::json Rule::to_json() const {
  switch (kind_) {
    case Kind::kConstant:
      return value_;
    case Kind::kTouchesFile:
      return {{"touches_file", arg_}};
    case Kind::kTouchesFunction:
      return {{"touches_function", arg_}};
    case Kind::kAddsLine:
      return {{"adds_line_containing", arg_}};
    case Kind::kRemovesLine:
      return {{"removes_line_containing", arg_}};
    case Kind::kAll:
    case Kind::kAny: {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& c : children_) arr.push_back(c.to_json());
      return {{kind_ == Kind::kAll ? "all" : "any", arr}};
    }
    case Kind::kNot:
      return {{"not", children_.front().to_json()}};
  }
  return false;
}

SimScenario SimScenario::from_json(const nlohmann::json& j) {
  SimScenario s;
  if (!j.contains("bug_id")) throw MissingField("bug_id");
  s.bug_id = j.at("bug_id").get<std::string>();
  if (j.contains("compile_predicate")) {
    s.compile_predicate = Rule::parse(j.at("compile_predicate"));
  }
  if (j.contains("fix_predicate")) {
    s.fix_predicate = Rule::parse(j.at("fix_predicate"));
  }
  s.crash_prob_unfixed = check_probability(j, "crash_prob_unfixed", 1.0);
  s.crash_prob_fixed = check_probability(j, "crash_prob_fixed", 0.0);
  s.crash_report = j.value("crash_report", "");
  s.mutated_report = j.value("mutated_report", "");
  s.compile_log = j.value("compile_log", "");
  return s;
}

nlohmann::json SimScenario::to_json() const {
  return {{"bug_id", bug_id},
          {"compile_predicate", compile_predicate.to_json()},
          {"fix_predicate", fix_predicate.to_json()},
          {"crash_prob_unfixed", crash_prob_unfixed},
          {"crash_prob_fixed", crash_prob_fixed},
          {"crash_report", crash_report},
          {"mutated_report", mutated_report},
          {"compile_log", compile_log}};
}

std::vector<SimScenario> load_scenarios(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<SimScenario> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    out.push_back(SimScenario::from_json(nlohmann::json::parse(in)));
  }
  return out;
}

TreeResolver directory_tree_resolver(std::filesystem::path root) {
  return [root = std::move(root)](const std::string& ref)
             -> std::shared_ptr<const patch::SourceTree> {
    return std::make_shared<patch::DirectoryTree>(root / ref);
  };
}

Simulator::Simulator(TreeResolver trees, CostProfile profile)
    : trees_(std::move(trees)), profile_(profile) {}

void Simulator::add_scenario(SimScenario scenario) {
  std::lock_guard<std::mutex> lock(mu_);
  std::string id = scenario.bug_id;
  scenarios_[id] = std::move(scenario);
}

bool Simulator::has_scenario(const std::string& bug_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  return scenarios_.count(bug_id) > 0;
}

SimulatorStats Simulator::stats() const {
  std::lock_guard<std::mutex> lock(mu_);
  return stats_;
}

void Simulator::maybe_fail() {
  int budget = fail_budget_.load();
  while (budget > 0) {
    if (fail_budget_.compare_exchange_weak(budget, budget - 1)) {
      throw BackendUnavailable("simulated outage");
    }
  }
}

const SimScenario& Simulator::scenario_for(const std::string& bug_id) const {
  auto it = scenarios_.find(bug_id);
  if (it == scenarios_.end()) {
    throw Error("UnknownScenario", "no simulator scenario for bug " + bug_id);
  }
  return it->second;
}

JobHandle<BuildResult> Simulator::submit_build(const BuildJob& job) {
  maybe_fail();
  const std::string digest = job.digest();
  {
    std::lock_guard<std::mutex> lock(mu_);
    ++stats_.builds_submitted;
    auto it = build_cache_.find(digest);
    if (it != build_cache_.end()) {
      ++stats_.build_cache_hits;
      return it->second;
    }
  }

  const patch::Patch parsed = patch::parse_unified_diff(job.patch);
  SimScenario scenario;
  {
    std::lock_guard<std::mutex> lock(mu_);
    scenario = scenario_for(job.bug_id);
  }

  const double u = keyed_uniform(fnv1a64(digest), "build-latency", 0);
  BuildResult result;
  result.vcpu_seconds[kBuilder] = profile_.build_vcpu_seconds;
  result.latency_seconds =
      noisy(profile_.build_latency_seconds, profile_.latency_noise_fraction, u);
  Artifact artifact{job.bug_id, false, parsed.empty()};

  if (!parsed.empty()) {
    patch::DiffAnalysis analysis;
    std::string failure;
    try {
      auto tree = trees_(job.source_ref);
      analysis = patch::extract_modified_functions(parsed, *tree);
      for (const auto& w : analysis.warnings) {
        if (w.rfind("PatchDoesNotApply", 0) == 0) failure = w;
      }
    } catch (const Error& e) {
      failure = e.what();
    }
    if (!failure.empty()) {
      result.ok = false;
      result.log = "error: patch does not apply: " + failure;
    } else if (scenario.compile_predicate.matches(analysis, parsed)) {
      result.ok = false;
      result.log = scenario.compile_log.empty()
                       ? "error: build failed for " + job.bug_id
                       : scenario.compile_log;
    } else {
      result.ok = true;
      artifact.fixed = scenario.fix_predicate.matches(analysis, parsed);
    }
  } else {
    result.ok = true;
  }

  std::lock_guard<std::mutex> lock(mu_);
  if (result.ok) {
    result.kernel_artifact_ref = "kernel:" + digest;
    artifacts_[result.kernel_artifact_ref] = artifact;
  }
  auto handle = JobHandle<BuildResult>::completed("build-" + digest, result);
  build_cache_.emplace(digest, handle);
  return handle;
}

JobHandle<ReproductionOutcome> Simulator::submit_reproduction(
    const ReproductionJob& job) {
  maybe_fail();
  if (job.trials < 1) throw InvalidField("trials", "must be at least 1");
  Artifact artifact;
  SimScenario scenario;
  long serial = 0;
  {
    std::lock_guard<std::mutex> lock(mu_);
    ++stats_.reproductions_submitted;
    serial = stats_.reproductions_submitted;
    auto it = artifacts_.find(job.kernel_artifact_ref);
    if (it == artifacts_.end()) {
      throw UnknownKernelArtifact(job.kernel_artifact_ref);
    }
    artifact = it->second;
    scenario = scenario_for(artifact.bug_id);
  }

  const double p =
      artifact.fixed ? scenario.crash_prob_fixed : scenario.crash_prob_unfixed;
  ReproductionOutcome out;
  out.crashed.reserve(job.trials);
  for (int i = 0; i < job.trials; ++i) {
    out.crashed.push_back(
        keyed_uniform(job.seed, artifact.bug_id, std::uint64_t(i)) < p);
  }
  if (out.crash_count() > 0) {
    const bool mutated = !artifact.empty_patch && !scenario.mutated_report.empty();
    out.crash_report = mutated ? scenario.mutated_report : scenario.crash_report;
    if (out.crash_report->empty()) {
      out.crash_report = "kernel crash reproduced for " + artifact.bug_id;
    }
  }
  out.vcpu_seconds[kVmManager] =
      profile_.vm_vcpu_seconds_per_trial * double(job.trials);
  const double u = keyed_uniform(job.seed, job.kernel_artifact_ref,
                                 std::uint64_t(job.trials) + 1);
  out.latency_seconds = noisy(profile_.reproduction_latency_seconds,
                              profile_.latency_noise_fraction, u);
  return JobHandle<ReproductionOutcome>::completed(
      "repro-" + std::to_string(serial), out);
}

}  // namespace crashbench::exec
