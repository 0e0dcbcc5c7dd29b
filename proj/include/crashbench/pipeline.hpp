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

#ifndef CRASHBENCH_PIPELINE_HPP_
#define CRASHBENCH_PIPELINE_HPP_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "crashbench/date.hpp"
#include "crashbench/env.hpp"
#include "crashbench/error.hpp"
#include "crashbench/evaluator.hpp"
#include "crashbench/exec_backend.hpp"
#include "crashbench/invoker.hpp"
#include "json.hpp"

namespace crashbench::pipeline {

// Invalid or inconsistent configuration; maps to exit code 2.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& why) : Error("ConfigError", why) {}
};

class StageFailed : public Error {
 public:
  StageFailed(std::string stage, const std::string& cause)
      : Error("StageFailed", stage + ": " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct AgentSpec {
  std::filesystem::path manifest;
  env::AgentOverlay overlay;
  std::string scaffold;
  std::string model;
  bool crf_enabled = true;
  bool oracle_mode = false;
  std::optional<double> budget_usd;  // overrides limits.budget_usd
};

struct BackendConfig {
  std::string kind = "sim";  // sim | remote
  std::filesystem::path scenarios;
  std::string endpoint;
};

struct JudgeSpec {
  std::string kind = "rule";  // rule | scripted | command
  std::string script;
  std::string command;
};

struct ScheduleConfig {
  double interval_seconds = 7 * 24 * 3600.0;
  double jitter_fraction = 0.1;
};

// Paths are resolved against the config file's directory at load time.
struct ExperimentConfig {
  std::filesystem::path base_dir;
  std::string experiment;
  std::filesystem::path corpus;
  std::filesystem::path reports_dir;
  std::string reports_feed;
  std::filesystem::path trees;
  std::filesystem::path store;
  std::filesystem::path results;
  std::filesystem::path sandbox;
  std::filesystem::path run_kernel;  // empty: next to the running binary
  BackendConfig backend;
  std::uint64_t seed = 0;
  int attempts = 1;
  int curation_attempts = 5;
  std::vector<AgentSpec> agents;
  env::Limits limits;
  int runs = 25;
  int votes = 9;
  int threshold = 5;
  int crf_trials = 10;
  std::string criterion = eval::kDefaultCriterion;
  JudgeSpec judge;
  std::optional<Date> cutoff_date;
  std::optional<exec::Pricing> pricing;
  int pool_size = 4;
  ScheduleConfig schedule;

  static ExperimentConfig load(const std::filesystem::path& path);
  static ExperimentConfig from_json(const nlohmann::json& j,
                                    const std::filesystem::path& base_dir);

  // Throws ConfigError.
  void validate() const;
  // Canonical form of every field that affects results.
  nlohmann::json canonical() const;
  std::string digest() const;
};

enum class Stage { kIngest, kCurate, kRun, kEvaluate, kReport };

std::string to_string(Stage s);
Stage stage_from_string(const std::string& s);
std::vector<Stage> all_stages();

struct StageSummary {
  Stage stage;
  bool up_to_date = false;
  nlohmann::json counts = nlohmann::json::object();
};

struct PipelineSummary {
  std::string experiment;
  std::vector<StageSummary> stages;

  nlohmann::json to_json() const;
  std::string render() const;
};

struct PipelineOptions {
  std::vector<Stage> stages = all_stages();
  bool force = false;
  // Used instead of the configured backend when set (tests, embedding).
  exec::ExecutionBackend* backend = nullptr;
  std::ostream* log = nullptr;
};

std::unique_ptr<exec::ExecutionBackend> make_backend(
    const ExperimentConfig& config);
std::unique_ptr<eval::JudgeClient> make_judge(const ExperimentConfig& config);

// Runs the requested stages in order. Completed work is skipped; a stage that
// throws aborts the run with StageFailed and leaves earlier output in place.
PipelineSummary run_pipeline(const ExperimentConfig& config,
                             const PipelineOptions& options = {});

// Re-runs the pipeline every interval (with jitter) until `cycles` runs have
// completed; cycles <= 0 loops forever.
void run_scheduled(const ExperimentConfig& config,
                   const PipelineOptions& options, int cycles,
                   const std::function<void(std::chrono::duration<double>)>&
                       sleep = {});

}  // namespace crashbench::pipeline

#endif  // CRASHBENCH_PIPELINE_HPP_
