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
#include <thread>

#include "crashbench/store.hpp"
#include "test_util.hpp"

namespace crashbench::dashboard {
namespace {

using nlohmann::json;
using testing::TempDir;

corpus::BugRecord bug(const std::string& id, bool fixed = true) {
  corpus::BugRecord b;
  b.bug_id = id;
  b.title = "KASAN: use-after-free in " + id;
  b.subsystem = "net";
  b.bug_type = "KASAN";
  b.reported_date = Date::parse("2025-01-10");
  b.kernel_commit = "v1";
  b.reproducer = "sha256:" + std::string(64, 'a');
  b.crash_report = "BUG";
  if (fixed) {
    b.fix = corpus::FixRecord{Date::parse("2025-03-01"), "abc", "fix", "--- a/x\n"};
  }
  return b;
}

env::AgentRunArtifact artifact(const std::string& bug_id, int attempt) {
  env::AgentRunArtifact a;
  a.bug_id = bug_id;
  a.agent_name = "agent";
  a.attempt_index = attempt;
  a.patch = "p";
  a.dollar_cost = 0.25;
  a.trajectory = {{0.5, "step", {{"n", 1}}}};
  a.exit_status = env::ExitStatus::kBudgetExceeded;
  a.exit_code = 137;
  a.limit_hit = "budget";
  return a;
}

eval::EvaluationRecord evaluation(const std::string& bug_id, int attempt) {
  eval::EvaluationRecord r;
  r.experiment = "exp";
  r.bug_id = bug_id;
  r.agent_name = "agent";
  r.attempt_index = attempt;
  r.crash_resolved = true;
  r.compile_ok = true;
  r.equivalence = eval::Equivalence::kEquivalent;
  r.judge_votes = std::make_pair(9, 0);
  r.localization = patch::LocalizationScore{1.0, 0.5};
  return r;
}

TEST(StoreTest, BugsAreUpserted) {
  TempDir dir;
  Store store(dir / "db.sqlite");
  store.upsert_bug(bug("b1", false));
  auto updated = bug("b1");
  updated.reproduction_rate = 0.8;
  store.upsert_bug(updated);
  const auto snap = store.snapshot();
  ASSERT_EQ(snap.bugs.size(), 1u);
  EXPECT_EQ(snap.bugs[0], updated);
  EXPECT_NE(snap.bug("b1"), nullptr);
  EXPECT_EQ(snap.bug("missing"), nullptr);
}

TEST(StoreTest, RunsAndEvaluationsAreInsertOnce) {
  TempDir dir;
  Store store(dir / "db.sqlite");
  EXPECT_TRUE(store.insert_run("exp", artifact("b1", 1)));
  auto again = artifact("b1", 1);
  again.patch = "changed";
  EXPECT_FALSE(store.insert_run("exp", again));
  const auto run = store.run("exp", "b1", "agent", 1);
  ASSERT_TRUE(run.has_value());
  EXPECT_EQ(run->patch, "p");
  EXPECT_EQ(run->trajectory, artifact("b1", 1).trajectory);
  EXPECT_EQ(run->exit_status, env::ExitStatus::kBudgetExceeded);
  EXPECT_EQ(run->exit_code, 137);
  EXPECT_EQ(run->limit_hit, "budget");
  EXPECT_TRUE(store.has_run("exp", "b1", "agent", 1));
  EXPECT_FALSE(store.has_run("exp", "b1", "agent", 2));
  EXPECT_FALSE(store.has_run("other", "b1", "agent", 1));
  EXPECT_EQ(store.count_runs("exp"), 1);

  EXPECT_TRUE(store.insert_evaluation(evaluation("b1", 1)));
  auto flipped = evaluation("b1", 1);
  flipped.crash_resolved = false;
  EXPECT_FALSE(store.insert_evaluation(flipped));
  EXPECT_EQ(store.count_evaluations("exp"), 1);
  EXPECT_EQ(store.snapshot().evaluations.at(0), evaluation("b1", 1));
}

TEST(StoreTest, AgentsCurationAndStages) {
  TempDir dir;
  Store store(dir / "db.sqlite");
  AgentInfo a{"exp", "agent", "mini", "model-x", false, true, 5.0};
  store.upsert_agent(a);
  store.put_curation({"b1", false, 5, 0, "NotReproduced: 0/5 trials"});
  store.set_stage({"exp", "run", "done", "d1", {{"executed", 3}}, ""});
  const auto snap = store.snapshot();
  ASSERT_NE(snap.agent("exp", "agent"), nullptr);
  EXPECT_EQ(*snap.agent("exp", "agent"), a);
  EXPECT_EQ(snap.agent("other", "agent"), nullptr);
  EXPECT_EQ(snap.curation.at("b1").reason, "NotReproduced: 0/5 trials");
  const auto st = store.stage("exp", "run");
  ASSERT_TRUE(st.has_value());
  EXPECT_EQ(st->status, "done");
  EXPECT_EQ(st->counts["executed"], 3);
  EXPECT_FALSE(st->updated_at.empty());
  EXPECT_FALSE(store.stage("exp", "report").has_value());
}

TEST(StoreTest, ExperimentResetDropsOnlyThatExperiment) {
  TempDir dir;
  Store store(dir / "db.sqlite");
  EXPECT_FALSE(store.experiment_digest("exp").has_value());
  store.put_experiment("exp", "d1", json{{"k", 1}});
  EXPECT_EQ(store.experiment_digest("exp"), "d1");
  store.upsert_bug(bug("b1"));
  store.insert_run("exp", artifact("b1", 1));
  store.insert_run("keep", artifact("b1", 1));
  store.insert_evaluation(evaluation("b1", 1));
  store.set_stage({"exp", "run", "done", "d1", json::object(), ""});
  store.reset_experiment("exp");
  EXPECT_EQ(store.count_runs("exp"), 0);
  EXPECT_EQ(store.count_evaluations("exp"), 0);
  EXPECT_FALSE(store.stage("exp", "run").has_value());
  EXPECT_EQ(store.count_runs("keep"), 1);
  EXPECT_EQ(store.snapshot().bugs.size(), 1u);
}

TEST(StoreTest, PersistsAcrossReopenAndConcurrentWriters) {
  TempDir dir;
  {
    Store store(dir / "db.sqlite");
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
      threads.emplace_back([&store, t] {
        for (int i = 1; i <= 10; ++i) store.insert_run("exp", artifact("b" + std::to_string(t), i));
      });
    }
    for (auto& th : threads) th.join();
  }
  Store reopened(dir / "db.sqlite");
  EXPECT_EQ(reopened.count_runs("exp"), 40);
}

TEST(StoreTest, UnopenablePathFails) {
  TempDir dir;
  std::ofstream(dir / "file") << "x";
  EXPECT_ANY_THROW(Store(dir / "file" / "db.sqlite"));
  std::ofstream(dir / "garbage.sqlite") << std::string(4096, 'z');
  EXPECT_THROW(Store(dir / "garbage.sqlite"), Error);
}

}  // namespace
}  // namespace crashbench::dashboard
