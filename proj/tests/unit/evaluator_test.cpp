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

#include <gtest/gtest.h>

#include <fstream>

#include "crashbench/analysis.hpp"
#include "crashbench/evaluator.hpp"
#include "crashbench/simulator.hpp"
#include "test_util.hpp"

namespace crashbench::eval {
namespace {

using nlohmann::json;
using testing::TempDir;

const char* kSource = "int f(int x)\n{\n\treturn x;\n}\n\nint g(void)\n{\n\treturn 0;\n}\n";

std::string edit(const std::string& from, const std::string& to) {
  std::string after = kSource;
  after.replace(after.find(from), from.size(), to);
  return patch::diff_trees({{"a.c", kSource}}, {{"a.c", after}});
}

corpus::FixRecord fix() {
  return {Date::parse("2024-02-01"), "abc", "a: fix f", edit("return x;", "return x + 1;")};
}

JudgeConfig fast(int votes = 9, int threshold = 5) {
  JudgeConfig c;
  c.votes = votes;
  c.threshold = threshold;
  c.retry.retries = 2;
  c.retry.backoff = std::chrono::milliseconds(0);
  return c;
}

TEST(JudgeTest, MajorityOfNineWithThresholdFive) {
  ScriptedJudge five("EEEEEDDDD");
  auto o = judge_equivalence("p", fix(), five, fast());
  EXPECT_EQ(o.verdict, Equivalence::kEquivalent);
  EXPECT_EQ(o.equivalent_votes, 5);
  EXPECT_EQ(o.discrepant_votes, 4);
  ScriptedJudge four("EEEEDDDDD");
  EXPECT_EQ(judge_equivalence("p", fix(), four, fast()).verdict, Equivalence::kDiscrepant);
}

TEST(JudgeTest, TransientFailuresAreRetried) {
  ScriptedJudge j("XE");
  const auto o = judge_equivalence("p", fix(), j, fast());
  EXPECT_EQ(o.verdict, Equivalence::kEquivalent);
  EXPECT_EQ(o.equivalent_votes, 9);
  EXPECT_TRUE(o.flag.empty());
}

TEST(JudgeTest, ExhaustedRetriesWithholdVerdict) {
  ScriptedJudge none("X");
  auto o = judge_equivalence("p", fix(), none, fast());
  EXPECT_EQ(o.verdict, Equivalence::kWithheld);
  EXPECT_EQ(o.flag, "JudgeUnavailable");
  ScriptedJudge partial("EEXXXXXXXXXXXXXXXXXXXXXXXXXXXX");
  o = judge_equivalence("p", fix(), partial, fast());
  EXPECT_EQ(o.verdict, Equivalence::kWithheld);
  EXPECT_EQ(o.flag, "PartialVotes(2)");
}

TEST(JudgeTest, ConfigValidation) {
  EXPECT_THROW(validate(fast(8, 5)), InvalidField);
  EXPECT_THROW(validate(fast(9, 4)), InvalidField);
  EXPECT_THROW(validate(fast(9, 10)), InvalidField);
  EXPECT_NO_THROW(validate(fast(1, 1)));
}

TEST(JudgeTest, RuleJudgeComparesChangedLines) {
  RuleJudge j;
  JudgeRequest same{fix().dev_patch, fix().dev_patch, "", "", 0};
  EXPECT_EQ(j.vote(same), Vote::kEquivalent);
  JudgeRequest spaced{edit("return x;", "return   x +  1;"), fix().dev_patch, "", "", 0};
  EXPECT_EQ(j.vote(spaced), Vote::kEquivalent);
  JudgeRequest other{edit("return 0;", "return 1;"), fix().dev_patch, "", "", 0};
  EXPECT_EQ(j.vote(other), Vote::kDiscrepant);
  JudgeRequest empty{"", fix().dev_patch, "", "", 0};
  EXPECT_EQ(j.vote(empty), Vote::kDiscrepant);
}

TEST(JudgeTest, CommandJudgeReadsFirstWord) {
  JudgeRequest req{"p", "d", "m", "c", 0};
  EXPECT_EQ(CommandJudge("cat >/dev/null; echo 'Equivalent: same fix'").vote(req),
            Vote::kEquivalent);
  EXPECT_EQ(CommandJudge("grep -q dev_patch && echo discrepant").vote(req),
            Vote::kDiscrepant);
  EXPECT_THROW(CommandJudge("cat >/dev/null; exit 1").vote(req), JudgeUnavailable);
  EXPECT_THROW(CommandJudge("cat >/dev/null; echo maybe").vote(req), JudgeUnavailable);
}

TEST(EquivalenceTest, StringsRoundTrip) {
  for (auto e : {Equivalence::kEquivalent, Equivalence::kDiscrepant,
                 Equivalence::kNotApplicable, Equivalence::kWithheld}) {
    EXPECT_EQ(equivalence_from_string(to_string(e)), e);
  }
}

class CrashEvalTest : public ::testing::Test {
 protected:
  CrashEvalTest()
      : tree_(std::make_shared<patch::MemoryTree>(patch::FileMap{{"a.c", kSource}})),
        sim_([t = tree_](const std::string&) -> std::shared_ptr<const patch::SourceTree> {
          return t;
        }) {
    exec::SimScenario s;
    s.bug_id = "b1";
    s.compile_predicate = exec::Rule::parse(json{{"adds_line_containing", "#error"}});
    s.fix_predicate = exec::Rule::parse(json{{"touches_function", "a.c::f"}});
    s.compile_log = "boom";
    sim_.add_scenario(s);
    bug_.bug_id = "b1";
    bug_.kernel_commit = "v1";
    bug_.reproducer = "sha256:" + std::string(64, 'r');
    bug_.crash_report = "BUG";
    bug_.reproduction_rate = 1.0;
    bug_.fix = fix();
    config_.experiment = "exp";
    config_.crash.retry = {3, std::chrono::milliseconds(0)};
    config_.judge = fast();
  }

  env::AgentRunArtifact artifact(const std::string& patch, int attempt = 1) {
    env::AgentRunArtifact a;
    a.bug_id = "b1";
    a.agent_name = "agent";
    a.attempt_index = attempt;
    a.patch = patch;
    a.dollar_cost = 0.5;
    a.trajectory = {{0.1, env::kCrfEvent, json::object()}};
    return a;
  }

  std::shared_ptr<patch::MemoryTree> tree_;
  exec::Simulator sim_;
  corpus::BugRecord bug_;
  EvalConfig config_;
  RuleJudge judge_;
};

TEST_F(CrashEvalTest, ResolvedRequiresEveryRunClean) {
  const auto ok = evaluate_crash_resolution(bug_, fix().dev_patch, sim_, config_.crash);
  EXPECT_TRUE(ok.crash_resolved);
  EXPECT_EQ(ok.runs, 25);
  EXPECT_EQ(ok.crashes, 0);
  const auto bad = evaluate_crash_resolution(bug_, "", sim_, config_.crash);
  EXPECT_FALSE(bad.crash_resolved);
  EXPECT_EQ(bad.crashes, 25);
}

TEST_F(CrashEvalTest, CompileFailureSkipsReproduction) {
  const auto r = evaluate_crash_resolution(bug_, edit("int g", "#error\nint g"), sim_,
                                           config_.crash);
  EXPECT_FALSE(r.compile_ok);
  EXPECT_FALSE(r.crash_resolved);
  EXPECT_EQ(r.compile_log, "boom");
  EXPECT_EQ(sim_.stats().reproductions_submitted, 0);
}

TEST_F(CrashEvalTest, BackendOutagesAreRetriedThenPending) {
  sim_.fail_next_submissions(2);
  EXPECT_TRUE(evaluate_crash_resolution(bug_, fix().dev_patch, sim_, config_.crash)
                  .crash_resolved);
  sim_.fail_next_submissions(100);
  const auto r = evaluate_crash_resolution(bug_, fix().dev_patch, sim_, config_.crash);
  EXPECT_TRUE(r.pending);
  EXPECT_FALSE(r.crash_resolved);
}

TEST_F(CrashEvalTest, AttemptRecordForFixedBug) {
  const auto rec = evaluate_attempt(artifact(fix().dev_patch), bug_, sim_, judge_,
                                    *tree_, config_);
  EXPECT_EQ(rec.experiment, "exp");
  EXPECT_TRUE(rec.crash_resolved);
  EXPECT_TRUE(rec.compile_ok);
  EXPECT_EQ(rec.equivalence, Equivalence::kEquivalent);
  EXPECT_EQ(rec.judge_votes, std::make_pair(9, 0));
  ASSERT_TRUE(rec.localization.has_value());
  EXPECT_EQ(rec.localization->file_iou, 1.0);
  EXPECT_EQ(rec.localization->function_iou, 1.0);
  EXPECT_EQ(rec.dollar_cost, 0.5);
  EXPECT_EQ(rec.crf_calls, 1);
  EXPECT_EQ(rec.exit_status, "completed");
  EXPECT_EQ(json(rec).get<EvaluationRecord>(), rec);
}

TEST_F(CrashEvalTest, EmptyPatchIsStillJudged) {
  const auto rec = evaluate_attempt(artifact(""), bug_, sim_, judge_, *tree_, config_);
  EXPECT_FALSE(rec.crash_resolved);
  EXPECT_EQ(rec.equivalence, Equivalence::kDiscrepant);
  EXPECT_EQ(rec.localization->file_iou, 0.0);
}

TEST_F(CrashEvalTest, OpenBugStopsAfterCrashResolution) {
  bug_.fix.reset();
  const auto rec = evaluate_attempt(artifact(edit("return x;", "return 0;")), bug_, sim_,
                                    judge_, *tree_, config_);
  EXPECT_TRUE(rec.crash_resolved);
  EXPECT_EQ(rec.equivalence, Equivalence::kNotApplicable);
  EXPECT_FALSE(rec.localization.has_value());
  EXPECT_FALSE(rec.judge_votes.has_value());
}

TEST_F(CrashEvalTest, AttemptsUseDistinctSeeds) {
  EXPECT_NE(attempt_seed(1, "b1", "a", 1), attempt_seed(1, "b1", "a", 2));
  EXPECT_NE(attempt_seed(1, "b1", "a", 1), attempt_seed(1, "b1", "b", 1));
  EXPECT_EQ(attempt_seed(1, "b1", "a", 1), attempt_seed(1, "b1", "a", 1));
  EXPECT_THROW(evaluate_attempt(artifact(""), [&] {
                 auto b = bug_;
                 b.bug_id = "other";
                 return b;
               }(), sim_, judge_, *tree_, config_),
               InvalidField);
}

TEST(ResultStoreTest, WriteOnceAndList) {
  TempDir dir;
  ResultStore store(dir.path());
  EvaluationRecord r;
  r.experiment = "exp";
  r.bug_id = "b1";
  r.agent_name = "a";
  r.attempt_index = 2;
  r.crash_resolved = true;
  EXPECT_TRUE(store.put(r));
  auto changed = r;
  changed.crash_resolved = false;
  EXPECT_FALSE(store.put(changed));
  EXPECT_EQ(store.get("exp", "b1", "a", 2), r);
  EXPECT_TRUE(store.contains("exp", "b1", "a", 2));
  EXPECT_FALSE(store.contains("exp", "b1", "a", 1));
  std::ofstream(dir / "exp" / "report.json") << "{}";
  EXPECT_EQ(store.list("exp").size(), 1u);
  r.pending = true;
  r.attempt_index = 3;
  EXPECT_THROW(store.put(r), InvalidField);
  EXPECT_THROW(store.path("exp", "../b", "a", 1), InvalidField);
}

}  // namespace
}  // namespace crashbench::eval
