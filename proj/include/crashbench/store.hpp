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

#ifndef CRASHBENCH_STORE_HPP_
#define CRASHBENCH_STORE_HPP_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "crashbench/corpus.hpp"
#include "crashbench/evaluator.hpp"
#include "crashbench/invoker.hpp"
#include "json.hpp"

struct sqlite3;

namespace crashbench::dashboard {

// Per-experiment agent configuration; the dimensions the dashboard slices by.
struct AgentInfo {
  std::string experiment;
  std::string agent_name;
  std::string scaffold;
  std::string model;
  bool crf_enabled = true;
  bool oracle_mode = false;
  std::optional<double> cost_limit;

  friend bool operator==(const AgentInfo&, const AgentInfo&) = default;
};

struct RunRow {
  std::string experiment;
  env::AgentRunArtifact artifact;
};

struct StageState {
  std::string experiment;
  std::string stage;
  std::string status;  // "done" or "failed"
  std::string digest;
  nlohmann::json counts = nlohmann::json::object();
  std::string updated_at;
};

// Immutable view of the store taken inside one read transaction.
struct Snapshot {
  std::vector<corpus::BugRecord> bugs;
  std::map<std::string, corpus::CurationResult> curation;
  std::vector<AgentInfo> agents;
  std::vector<eval::EvaluationRecord> evaluations;

  const AgentInfo* agent(const std::string& experiment,
                         const std::string& name) const;
  const corpus::BugRecord* bug(const std::string& bug_id) const;
};

// Embedded SQLite store. Bugs and agents are upserted; runs and evaluations
// are insert-once per (experiment, bug, agent, attempt).
class Store {
 public:
  explicit Store(const std::filesystem::path& db_path);
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  void upsert_bug(const corpus::BugRecord& bug);
  void put_curation(const corpus::CurationResult& result);
  void upsert_agent(const AgentInfo& agent);
  bool insert_run(const std::string& experiment,
                  const env::AgentRunArtifact& artifact);
  bool insert_evaluation(const eval::EvaluationRecord& record);

  std::optional<env::AgentRunArtifact> run(const std::string& experiment,
                                           const std::string& bug_id,
                                           const std::string& agent,
                                           int attempt) const;
  bool has_run(const std::string& experiment, const std::string& bug_id,
               const std::string& agent, int attempt) const;
  long count_runs(const std::string& experiment) const;
  long count_evaluations(const std::string& experiment) const;

  // Config digest of an experiment, if registered.
  std::optional<std::string> experiment_digest(const std::string& name) const;
  void put_experiment(const std::string& name, const std::string& digest,
                      const nlohmann::json& config);
  // Drops every run, evaluation, stage and agent row of the experiment.
  void reset_experiment(const std::string& name);

  void set_stage(const StageState& state);
  std::optional<StageState> stage(const std::string& experiment,
                                  const std::string& stage) const;

  Snapshot snapshot() const;

 private:
  void exec(const char* sql) const;

  sqlite3* db_ = nullptr;
  mutable std::mutex mu_;
};

}  // namespace crashbench::dashboard

#endif  // CRASHBENCH_STORE_HPP_
