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

#ifndef CRASHBENCH_EVALUATOR_HPP_
#define CRASHBENCH_EVALUATOR_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "crashbench/analysis.hpp"
#include "crashbench/corpus.hpp"
#include "crashbench/error.hpp"
#include "crashbench/exec_backend.hpp"
#include "crashbench/invoker.hpp"
#include "json.hpp"

namespace crashbench::eval {

class JudgeUnavailable : public Error {
 public:
  explicit JudgeUnavailable(const std::string& why)
      : Error("JudgeUnavailable", why) {}
};

enum class Vote { kEquivalent, kDiscrepant };

struct JudgeRequest {
  std::string agent_patch;
  std::string dev_patch;
  std::string commit_message;
  std::string criterion;
  int vote_index = 0;
};

// One independent vote per call. May throw JudgeUnavailable.
class JudgeClient {
 public:
  virtual ~JudgeClient() = default;
  virtual Vote vote(const JudgeRequest& req) = 0;
};

// Replays a script such as "EEEEEDDDD"; 'X' raises JudgeUnavailable. The
// script restarts from the top once exhausted.
class ScriptedJudge final : public JudgeClient {
 public:
  explicit ScriptedJudge(std::string script);
  Vote vote(const JudgeRequest& req) override;
  long calls() const { return calls_.load(); }

 private:
  std::string script_;
  std::atomic<long> calls_{0};
};

// Votes equivalent iff both patches make the same per-file line changes,
// ignoring whitespace, context and hunk placement.
class RuleJudge final : public JudgeClient {
 public:
  Vote vote(const JudgeRequest& req) override;
};

// Runs a shell command with the request as JSON on stdin; the first word of
// stdout must be "equivalent" or "discrepant".
class CommandJudge final : public JudgeClient {
 public:
  explicit CommandJudge(std::string command) : command_(std::move(command)) {}
  Vote vote(const JudgeRequest& req) override;

 private:
  std::string command_;
};

// Default strict criterion handed to the judge.
extern const char* const kDefaultCriterion;

enum class Equivalence { kEquivalent, kDiscrepant, kNotApplicable, kWithheld };

std::string to_string(Equivalence e);
Equivalence equivalence_from_string(const std::string& s);

struct RetryPolicy {
  int retries = 3;
  std::chrono::milliseconds backoff{100};  // doubled after each failure
};

struct JudgeConfig {
  int votes = 9;
  int threshold = 5;
  std::string criterion = kDefaultCriterion;
  RetryPolicy retry;
};

// Throws InvalidField unless votes is odd and ceil(votes/2) <= threshold <=
// votes.
void validate(const JudgeConfig& config);

struct JudgeOutcome {
  Equivalence verdict = Equivalence::kWithheld;
  int equivalent_votes = 0;
  int discrepant_votes = 0;
  std::string flag;  // "PartialVotes(n)" or "JudgeUnavailable" when withheld
};

JudgeOutcome judge_equivalence(const std::string& agent_patch,
                               const corpus::FixRecord& fix, JudgeClient& judge,
                               const JudgeConfig& config = {});

struct CrashEvalConfig {
  int runs = 25;
  std::uint64_t seed = 0;
  RetryPolicy retry;
};

struct CrashEval {
  bool crash_resolved = false;
  bool compile_ok = false;
  bool pending = false;  // backend stayed unavailable through all retries
  int runs = 0;
  int crashes = 0;
  std::string compile_log;
};

// Resolved means zero crashes over every run. Build failures submit no
// reproduction job.
CrashEval evaluate_crash_resolution(const corpus::BugRecord& bug,
                                    const std::string& patch,
                                    exec::ExecutionBackend& backend,
                                    const CrashEvalConfig& config = {});

patch::LocalizationScore evaluate_localization(const std::string& agent_patch,
                                               const corpus::FixRecord& fix,
                                               const patch::SourceTree& tree);

struct EvaluationRecord {
  std::string experiment;
  std::string bug_id;
  std::string agent_name;
  int attempt_index = 1;
  bool crash_resolved = false;
  bool compile_ok = false;
  int crash_runs = 0;
  int crashes = 0;
  std::optional<patch::LocalizationScore> localization;
  Equivalence equivalence = Equivalence::kNotApplicable;
  std::optional<std::pair<int, int>> judge_votes;  // (equivalent, discrepant)
  double dollar_cost = 0.0;
  double wall_time_seconds = 0.0;
  long crf_calls = 0;
  std::string exit_status;
  std::vector<std::string> flags;  // per-field errors and warnings
  bool pending = false;

  friend bool operator==(const EvaluationRecord&,
                         const EvaluationRecord&) = default;
};

void to_json(nlohmann::json& j, const EvaluationRecord& v);
void from_json(const nlohmann::json& j, EvaluationRecord& v);

struct EvalConfig {
  std::string experiment;
  CrashEvalConfig crash;
  JudgeConfig judge;
};

// Per-attempt reproduction seed, so attempts never share a trial stream.
std::uint64_t attempt_seed(std::uint64_t base, const std::string& bug_id,
                           const std::string& agent, int attempt);

EvaluationRecord evaluate_attempt(const env::AgentRunArtifact& artifact,
                                  const corpus::BugRecord& bug,
                                  exec::ExecutionBackend& backend,
                                  JudgeClient& judge,
                                  const patch::SourceTree& tree,
                                  const EvalConfig& config);

// results/<experiment>/<bug_id>/<agent>/<attempt>.json, each written once.
class ResultStore {
 public:
  explicit ResultStore(std::filesystem::path root) : root_(std::move(root)) {}

  std::filesystem::path path(const std::string& experiment,
                             const std::string& bug_id,
                             const std::string& agent, int attempt) const;

  // False when the record already exists; the stored copy is left intact.
  bool put(const EvaluationRecord& record) const;
  std::optional<EvaluationRecord> get(const std::string& experiment,
                                      const std::string& bug_id,
                                      const std::string& agent,
                                      int attempt) const;
  bool contains(const std::string& experiment, const std::string& bug_id,
                const std::string& agent, int attempt) const;
  std::vector<EvaluationRecord> list(const std::string& experiment) const;

 private:
  std::filesystem::path root_;
};

}  // namespace crashbench::eval

#endif  // CRASHBENCH_EVALUATOR_HPP_
