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

#include "crashbench/evaluator.hpp"

#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>

#include "crashbench/digest.hpp"
#include "crashbench/fs.hpp"
#include "crashbench/patch.hpp"

namespace crashbench::eval {
namespace {

using nlohmann::json;

void sleep_backoff(const RetryPolicy& policy, int failures) {
  if (policy.backoff.count() <= 0) return;
  std::this_thread::sleep_for(policy.backoff * (1L << std::min(failures, 16)));
}

// Runs fn, retrying on E up to policy.retries extra times. Returns nullopt if
// every try failed.
template <typename E, typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn)
    -> std::optional<decltype(fn())> {
  for (int attempt = 0;; ++attempt) {
    try {
      return fn();
    } catch (const E&) {
      if (attempt >= policy.retries) return std::nullopt;
      sleep_backoff(policy, attempt);
    }
  }
}

std::string squeeze(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\r') {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

std::map<std::string, std::vector<std::string>> change_signature(
    const std::string& diff) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& d : patch::parse_unified_diff(diff).files) {
    auto& lines = out[d.path()];
    for (const auto& h : d.hunks) {
      for (const auto& l : h.lines) {
        if (l.kind == patch::LineKind::kContext) continue;
        const std::string text = squeeze(l.text);
        if (text.empty()) continue;
        lines.push_back(std::string(1, char(l.kind)) + text);
      }
    }
    std::sort(lines.begin(), lines.end());
  }
  return out;
}

json localization_json(const patch::LocalizationScore& s) {
  return {{"file_iou", s.file_iou}, {"function_iou", s.function_iou}};
}

}  // namespace

const char* const kDefaultCriterion =
    "Decide whether the candidate patch is equivalent to the reference fix. "
    "Answer \"equivalent\" only when both patches change the same code in the "
    "same way: identical control flow and identical conditions, even if "
    "names or formatting differ. A patch that only avoids the symptom, or "
    "that fixes the bug by other means, is \"discrepant\".";

ScriptedJudge::ScriptedJudge(std::string script) : script_(std::move(script)) {
  if (script_.empty() ||
      script_.find_first_not_of("EDX") != std::string::npos) {
    throw InvalidField("script", "expected a nonempty string over {E,D,X}");
  }
}

Vote ScriptedJudge::vote(const JudgeRequest&) {
  const long i = calls_++;
  const char c = script_[std::size_t(i) % script_.size()];
  if (c == 'X') throw JudgeUnavailable("scripted outage");
  return c == 'E' ? Vote::kEquivalent : Vote::kDiscrepant;
}

Vote RuleJudge::vote(const JudgeRequest& req) {
  return change_signature(req.agent_patch) == change_signature(req.dev_patch)
             ? Vote::kEquivalent
             : Vote::kDiscrepant;
}

Vote CommandJudge::vote(const JudgeRequest& req) {
  const json body = {{"agent_patch", req.agent_patch},
                     {"dev_patch", req.dev_patch},
                     {"commit_message", req.commit_message},
                     {"criterion", req.criterion},
                     {"vote_index", req.vote_index}};
  char tmpl[] = "/tmp/crashbench-judge-XXXXXX";
  const int fd = ::mkstemp(tmpl);
  if (fd < 0) throw JudgeUnavailable("cannot create request file");
  const std::string payload = body.dump();
  const bool wrote =
      ::write(fd, payload.data(), payload.size()) == ssize_t(payload.size());
  ::close(fd);
  struct Unlink {
    const char* p;
    ~Unlink() { ::unlink(p); }
  } unlink_guard{tmpl};
  if (!wrote) throw JudgeUnavailable("cannot write request file");

  const std::string cmd = "{ " + command_ + "\n} < " + tmpl;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) throw JudgeUnavailable("cannot start judge command");
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = ::pclose(pipe);
  if (status != 0) {
    throw JudgeUnavailable("judge command exited with status " +
                           std::to_string(status));
  }
  std::istringstream words(out);
  std::string first;
  words >> first;
  while (!first.empty() && std::ispunct(static_cast<unsigned char>(first.back()))) {
    first.pop_back();
  }
  std::transform(first.begin(), first.end(), first.begin(),
                 [](unsigned char c) { return char(std::tolower(c)); });
  if (first == "equivalent") return Vote::kEquivalent;
  if (first == "discrepant") return Vote::kDiscrepant;
  throw JudgeUnavailable("unparseable judge output: " + out.substr(0, 200));
}

std::string to_string(Equivalence e) {
  switch (e) {
    case Equivalence::kEquivalent:
      return "equivalent";
    case Equivalence::kDiscrepant:
      return "discrepant";
    case Equivalence::kNotApplicable:
      return "not_applicable";
    case Equivalence::kWithheld:
      return "withheld";
  }
  return "withheld";
}

Equivalence equivalence_from_string(const std::string& s) {
  if (s == "equivalent") return Equivalence::kEquivalent;
  if (s == "discrepant") return Equivalence::kDiscrepant;
  if (s == "not_applicable") return Equivalence::kNotApplicable;
  if (s == "withheld") return Equivalence::kWithheld;
  throw InvalidField("equivalence", "unknown value '" + s + "'");
}

void validate(const JudgeConfig& c) {
  if (c.votes < 1 || c.votes % 2 == 0) {
    throw InvalidField("votes", "must be a positive odd number");
  }
  if (c.threshold < (c.votes + 1) / 2 || c.threshold > c.votes) {
    throw InvalidField("threshold", "must lie in [ceil(votes/2), votes]");
  }
}

JudgeOutcome judge_equivalence(const std::string& agent_patch,
                               const corpus::FixRecord& fix, JudgeClient& judge,
                               const JudgeConfig& config) {
  validate(config);
  JudgeOutcome out;
  for (int i = 0; i < config.votes; ++i) {
    JudgeRequest req{agent_patch, fix.dev_patch, fix.commit_message,
                     config.criterion, i};
    auto v = with_retries<JudgeUnavailable>(config.retry,
                                            [&] { return judge.vote(req); });
    if (!v) break;
    (*v == Vote::kEquivalent ? out.equivalent_votes : out.discrepant_votes)++;
  }
  const int got = out.equivalent_votes + out.discrepant_votes;
  if (got < config.votes) {
    out.verdict = Equivalence::kWithheld;
    out.flag = got == 0 ? "JudgeUnavailable"
                        : "PartialVotes(" + std::to_string(got) + ")";
    return out;
  }
  out.verdict = out.equivalent_votes >= config.threshold
                    ? Equivalence::kEquivalent
                    : Equivalence::kDiscrepant;
  return out;
}

CrashEval evaluate_crash_resolution(const corpus::BugRecord& bug,
                                    const std::string& patch,
                                    exec::ExecutionBackend& backend,
                                    const CrashEvalConfig& config) {
  if (config.runs < 1) throw InvalidField("runs", "must be at least 1");
  CrashEval out;
  exec::BuildJob build;
  build.bug_id = bug.bug_id;
  build.source_ref = bug.kernel_commit;
  build.config_ref = bug.kernel_config;
  build.patch = patch;
  auto built = with_retries<BackendUnavailable>(
      config.retry, [&] { return backend.submit_build(build).get(); });
  if (!built) {
    out.pending = true;
    return out;
  }
  if (!built->ok) {
    out.compile_log = built->log;
    return out;
  }
  out.compile_ok = true;

  exec::ReproductionJob repro;
  repro.kernel_artifact_ref = built->kernel_artifact_ref;
  repro.reproducer_ref = bug.reproducer;
  repro.trials = config.runs;
  repro.seed = config.seed;
  auto outcome = with_retries<BackendUnavailable>(
      config.retry, [&] { return backend.submit_reproduction(repro).get(); });
  if (!outcome) {
    out.pending = true;
    return out;
  }
  out.runs = config.runs;
  out.crashes = outcome->crash_count();
  out.crash_resolved = out.crashes == 0;
  return out;
}

patch::LocalizationScore evaluate_localization(const std::string& agent_patch,
                                               const corpus::FixRecord& fix,
                                               const patch::SourceTree& tree) {
  const auto agent =
      patch::extract_modified_functions(patch::parse_unified_diff(agent_patch), tree);
  const auto dev = patch::extract_modified_functions(
      patch::parse_unified_diff(fix.dev_patch), tree);
  return patch::localization_iou(agent, dev);
}

std::uint64_t attempt_seed(std::uint64_t base, const std::string& bug_id,
                           const std::string& agent, int attempt) {
  std::uint64_t h = splitmix64(base ^ fnv1a64(bug_id));
  h = splitmix64(h ^ fnv1a64(agent));
  return splitmix64(h ^ std::uint64_t(attempt));
}

EvaluationRecord evaluate_attempt(const env::AgentRunArtifact& artifact,
                                  const corpus::BugRecord& bug,
                                  exec::ExecutionBackend& backend,
                                  JudgeClient& judge,
                                  const patch::SourceTree& tree,
                                  const EvalConfig& config) {
  if (artifact.bug_id != bug.bug_id) {
    throw InvalidField("artifact", "belongs to " + artifact.bug_id +
                                       ", not " + bug.bug_id);
  }
  EvaluationRecord rec;
  rec.experiment = config.experiment;
  rec.bug_id = bug.bug_id;
  rec.agent_name = artifact.agent_name;
  rec.attempt_index = artifact.attempt_index;
  rec.dollar_cost = artifact.dollar_cost;
  rec.wall_time_seconds = artifact.wall_time_seconds;
  rec.crf_calls = artifact.crf_calls();
  rec.exit_status = env::to_string(artifact.exit_status);

  CrashEvalConfig crash = config.crash;
  crash.seed = attempt_seed(config.crash.seed, bug.bug_id, artifact.agent_name,
                            artifact.attempt_index);
  try {
    const CrashEval ce =
        evaluate_crash_resolution(bug, artifact.patch, backend, crash);
    rec.pending = ce.pending;
    rec.compile_ok = ce.compile_ok;
    rec.crash_resolved = ce.crash_resolved;
    rec.crash_runs = ce.runs;
    rec.crashes = ce.crashes;
    if (ce.pending) rec.flags.push_back("BackendUnavailable");
  } catch (const Error& e) {
    rec.flags.push_back("crash_resolution: " + e.code() + ": " + e.what());
  }

  if (!bug.fix) return rec;  // open bug: nothing to compare against

  try {
    rec.localization = evaluate_localization(artifact.patch, *bug.fix, tree);
  } catch (const Error& e) {
    rec.flags.push_back("localization: " + e.code() + ": " + e.what());
  }

  rec.equivalence = Equivalence::kWithheld;
  try {
    const JudgeOutcome j =
        judge_equivalence(artifact.patch, *bug.fix, judge, config.judge);
    rec.equivalence = j.verdict;
    rec.judge_votes = std::make_pair(j.equivalent_votes, j.discrepant_votes);
    if (!j.flag.empty()) rec.flags.push_back(j.flag);
  } catch (const Error& e) {
    rec.flags.push_back("equivalence: " + e.code() + ": " + e.what());
  }
  return rec;
}

void to_json(json& j, const EvaluationRecord& v) {
  j = {{"experiment", v.experiment},
       {"bug_id", v.bug_id},
       {"agent_name", v.agent_name},
       {"attempt_index", v.attempt_index},
       {"crash_resolved", v.crash_resolved},
       {"compile_ok", v.compile_ok},
       {"crash_runs", v.crash_runs},
       {"crashes", v.crashes},
       {"localization", v.localization ? localization_json(*v.localization)
                                       : json(nullptr)},
       {"equivalence", to_string(v.equivalence)},
       {"judge_votes",
        v.judge_votes ? json{{"equivalent", v.judge_votes->first},
                             {"discrepant", v.judge_votes->second}}
                      : json(nullptr)},
       {"dollar_cost", v.dollar_cost},
       {"wall_time_seconds", v.wall_time_seconds},
       {"crf_calls", v.crf_calls},
       {"exit_status", v.exit_status},
       {"flags", v.flags},
       {"pending", v.pending}};
}

void from_json(const json& j, EvaluationRecord& v) {
  v.experiment = j.value("experiment", "");
  v.bug_id = j.at("bug_id").get<std::string>();
  v.agent_name = j.at("agent_name").get<std::string>();
  v.attempt_index = j.at("attempt_index").get<int>();
  v.crash_resolved = j.at("crash_resolved").get<bool>();
  v.compile_ok = j.at("compile_ok").get<bool>();
  v.crash_runs = j.value("crash_runs", 0);
  v.crashes = j.value("crashes", 0);
  v.localization.reset();
  if (j.contains("localization") && !j.at("localization").is_null()) {
    const auto& l = j.at("localization");
    v.localization = patch::LocalizationScore{l.at("file_iou").get<double>(),
                                              l.at("function_iou").get<double>()};
  }
  v.equivalence = equivalence_from_string(j.at("equivalence").get<std::string>());
  v.judge_votes.reset();
  if (j.contains("judge_votes") && !j.at("judge_votes").is_null()) {
    const auto& jv = j.at("judge_votes");
    v.judge_votes = std::make_pair(jv.at("equivalent").get<int>(),
                                   jv.at("discrepant").get<int>());
  }
  v.dollar_cost = j.value("dollar_cost", 0.0);
  v.wall_time_seconds = j.value("wall_time_seconds", 0.0);
  v.crf_calls = j.value("crf_calls", 0L);
  v.exit_status = j.value("exit_status", "");
  v.flags = j.value("flags", std::vector<std::string>{});
  v.pending = j.value("pending", false);
}

std::filesystem::path ResultStore::path(const std::string& experiment,
                                        const std::string& bug_id,
                                        const std::string& agent,
                                        int attempt) const {
  for (const auto* part : {&experiment, &bug_id, &agent}) {
    if (!corpus::valid_bug_id(*part)) {
      throw InvalidField("result_key", "bad path component '" + *part + "'");
    }
  }
  return root_ / experiment / bug_id / agent /
         (std::to_string(attempt) + ".json");
}

bool ResultStore::put(const EvaluationRecord& r) const {
  if (r.pending) {
    throw InvalidField("record", "pending records are not persisted");
  }
  return write_file_once(
      path(r.experiment, r.bug_id, r.agent_name, r.attempt_index),
      json(r).dump(2) + "\n");
}

std::optional<EvaluationRecord> ResultStore::get(const std::string& experiment,
                                                 const std::string& bug_id,
                                                 const std::string& agent,
                                                 int attempt) const {
  auto body = read_file(path(experiment, bug_id, agent, attempt));
  if (!body) return std::nullopt;
  return json::parse(*body).get<EvaluationRecord>();
}

bool ResultStore::contains(const std::string& experiment,
                           const std::string& bug_id, const std::string& agent,
                           int attempt) const {
  return std::filesystem::exists(path(experiment, bug_id, agent, attempt));
}

std::vector<EvaluationRecord> ResultStore::list(
    const std::string& experiment) const {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  const auto dir = root_ / experiment;
  auto subdirs = [](const fs::path& p) {
    std::vector<fs::path> out;
    if (!fs::is_directory(p)) return out;
    for (const auto& e : fs::directory_iterator(p)) {
      if (e.is_directory()) out.push_back(e.path());
    }
    return out;
  };
  for (const auto& bug : subdirs(dir)) {
    for (const auto& agent : subdirs(bug)) {
      for (const auto& e : fs::directory_iterator(agent)) {
        const auto name = e.path().filename().string();
        if (e.is_regular_file() && e.path().extension() == ".json" &&
            name.front() != '.') {
          files.push_back(e.path());
        }
      }
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<EvaluationRecord> out;
  for (const auto& f : files) {
    out.push_back(json::parse(read_file(f).value_or("{}")).get<EvaluationRecord>());
  }
  return out;
}

}  // namespace crashbench::eval
