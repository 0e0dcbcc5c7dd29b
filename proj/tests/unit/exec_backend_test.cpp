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

#include <filesystem>

#include "crashbench/analysis.hpp"
#include "crashbench/error.hpp"
#include "crashbench/exec_backend.hpp"
#include "crashbench/remote_backend.hpp"
#include "crashbench/simulator.hpp"

namespace crashbench::exec {
namespace {

using nlohmann::json;

const char* kSource =
    "int f(int x)\n{\n\treturn x;\n}\n\nint g(int y)\n{\n\treturn y;\n}\n";

std::shared_ptr<patch::MemoryTree> tree() {
  return std::make_shared<patch::MemoryTree>(patch::FileMap{{"a.c", kSource}});
}

TreeResolver memory_resolver() {
  auto t = tree();
  return [t](const std::string&) -> std::shared_ptr<const patch::SourceTree> {
    return t;
  };
}

std::string edit(const std::string& from, const std::string& to) {
  std::string after = kSource;
  after.replace(after.find(from), from.size(), to);
  return patch::diff_trees({{"a.c", kSource}}, {{"a.c", after}});
}

SimScenario scenario() {
  return SimScenario::from_json(json{
      {"bug_id", "b1"},
      {"compile_predicate", {{"adds_line_containing", "#error"}}},
      {"fix_predicate", {{"touches_function", "a.c::f"}}},
      {"crash_prob_unfixed", 1.0},
      {"crash_report", "BUG: crash in f"},
      {"mutated_report", "BUG: different crash"},
      {"compile_log", "a.c:1: error"}});
}

BuildJob job(const std::string& patch) { return {"b1", "v1", patch, "", {}}; }

TEST(RuleTest, ParsesAndEvaluatesCombinators) {
  patch::DiffAnalysis a;
  a.modified_files = {"a.c"};
  a.modified_functions = {"a.c::f"};
  const patch::Patch p = patch::parse_unified_diff(edit("return x;", "return -x;"));
  const json spec = {{"all",
                      {{{"touches_file", "a.c"}},
                       {{"not", {{"touches_function", "a.c::g"}}}},
                       {{"any", {{{"adds_line_containing", "-x"}}, false}}}}}};
  const Rule r = Rule::parse(spec);
  EXPECT_TRUE(r.matches(a, p));
  EXPECT_EQ(r.to_json(), spec);
  EXPECT_FALSE(Rule::parse(json{{"removes_line_containing", "nope"}}).matches(a, p));
  EXPECT_FALSE(Rule().matches(a, p));
}

TEST(RuleTest, RejectsUnknownRules) {
  EXPECT_THROW(Rule::parse(json{{"touches_planet", "x"}}), InvalidField);
  EXPECT_THROW(Rule::parse(json::array()), InvalidField);
}

TEST(ScenarioTest, ValidatesProbabilities) {
  EXPECT_THROW(SimScenario::from_json(json{{"bug_id", "x"}, {"crash_prob_unfixed", 1.5}}),
               InvalidField);
  EXPECT_THROW(SimScenario::from_json(json::object()), MissingField);
}

TEST(SimulatorTest, EmptyPatchBuildsAndCrashes) {
  Simulator sim(memory_resolver());
  sim.add_scenario(scenario());
  const auto build = sim.submit_build(job("")).get();
  ASSERT_TRUE(build.ok);
  const auto out = sim.submit_reproduction({build.kernel_artifact_ref, "r", 5, 1}).get();
  EXPECT_EQ(out.crash_count(), 5);
  EXPECT_EQ(out.crash_report, "BUG: crash in f");
}

TEST(SimulatorTest, FixingPatchStopsCrashes) {
  Simulator sim(memory_resolver());
  sim.add_scenario(scenario());
  const auto build = sim.submit_build(job(edit("return x;", "return x + 1;"))).get();
  ASSERT_TRUE(build.ok);
  const auto out = sim.submit_reproduction({build.kernel_artifact_ref, "r", 25, 3}).get();
  EXPECT_EQ(out.crash_count(), 0);
  EXPECT_FALSE(out.crash_report.has_value());
}

TEST(SimulatorTest, NonFixingPatchReportsMutatedCrash) {
  Simulator sim(memory_resolver());
  sim.add_scenario(scenario());
  const auto build = sim.submit_build(job(edit("return y;", "return y + 1;"))).get();
  const auto out = sim.submit_reproduction({build.kernel_artifact_ref, "r", 1, 3}).get();
  EXPECT_EQ(out.crash_report, "BUG: different crash");
}

TEST(SimulatorTest, CompilePredicateFailsBuild) {
  Simulator sim(memory_resolver());
  sim.add_scenario(scenario());
  const auto build = sim.submit_build(job(edit("int g", "#error no\nint g"))).get();
  EXPECT_FALSE(build.ok);
  EXPECT_EQ(build.log, "a.c:1: error");
  EXPECT_TRUE(build.kernel_artifact_ref.empty());
}

TEST(SimulatorTest, PatchThatDoesNotApplyFailsBuild) {
  Simulator sim(memory_resolver());
  sim.add_scenario(scenario());
  const std::string stale = "--- a/a.c\n+++ b/a.c\n@@ -1 +1 @@\n-nothing here\n+x\n";
  const auto build = sim.submit_build(job(stale)).get();
  EXPECT_FALSE(build.ok);
  EXPECT_NE(build.log.find("does not apply"), std::string::npos);
}

TEST(SimulatorTest, BuildsAreCachedByDigest) {
  Simulator sim(memory_resolver());
  sim.add_scenario(scenario());
  const auto a = sim.submit_build(job("")).get();
  const auto b = sim.submit_build(job("")).get();
  EXPECT_EQ(a, b);
  EXPECT_EQ(sim.stats().builds_submitted, 2);
  EXPECT_EQ(sim.stats().build_cache_hits, 1);
}

TEST(SimulatorTest, ReproductionIsDeterministicPerSeed) {
  Simulator sim(memory_resolver());
  auto s = scenario();
  s.crash_prob_unfixed = 0.5;
  sim.add_scenario(s);
  const auto ref = sim.submit_build(job("")).get().kernel_artifact_ref;
  const auto a = sim.submit_reproduction({ref, "r", 64, 9}).get();
  const auto b = sim.submit_reproduction({ref, "r", 64, 9}).get();
  const auto c = sim.submit_reproduction({ref, "r", 64, 10}).get();
  EXPECT_EQ(a.crashed, b.crashed);
  EXPECT_NE(a.crashed, c.crashed);
}

TEST(SimulatorTest, ErrorsAndOutages) {
  Simulator sim(memory_resolver());
  sim.add_scenario(scenario());
  EXPECT_THROW(sim.submit_reproduction({"kernel:nope", "r", 1, 0}), UnknownKernelArtifact);
  EXPECT_THROW(sim.submit_build({"other", "v1", "", "", {}}), Error);
  sim.fail_next_submissions(2);
  EXPECT_THROW(sim.submit_build(job("")), BackendUnavailable);
  EXPECT_THROW(sim.submit_build(job("")), BackendUnavailable);
  EXPECT_NO_THROW(sim.submit_build(job("")));
}

TEST(CostTest, ReferenceCallCostsTwentyEightCents) {
  EXPECT_NEAR(estimate_job_cost(reference_call_usage(), default_pricing()), 0.28, 1e-12);
  const Pricing p = default_pricing();
  EXPECT_NEAR(p.at(kBuilder) / p.at(kVmManager), 4.43 / 1.55, 1e-12);
  EXPECT_THROW(estimate_job_cost({{"gpu", 1.0}}, p), MissingPrice);
}

TEST(CostTest, SimulatedTenTrialCallMatchesReferenceUsage) {
  Simulator sim(memory_resolver());
  sim.add_scenario(scenario());
  const auto build = sim.submit_build(job("")).get();
  const auto out = sim.submit_reproduction({build.kernel_artifact_ref, "r", 10, 0}).get();
  VcpuUsage total = build.vcpu_seconds;
  total += out.vcpu_seconds;
  EXPECT_NEAR(total.at(kBuilder), 545.05, 1e-9);
  EXPECT_NEAR(total.at(kVmManager), 576.16, 1e-9);
  // Build plus boot latency is about two minutes for a compile check.
  EXPECT_NEAR(build.latency_seconds / 60.0, 1.97, 0.2);
}

TEST(JsonTest, JobsRoundTrip) {
  const BuildJob j{"b", "v", "p", "c", std::string("k")};
  EXPECT_EQ(json(j).get<BuildJob>().digest(), j.digest());
  ReproductionOutcome o;
  o.crashed = {true, false};
  o.crash_report = "r";
  o.vcpu_seconds = {{kVmManager, 2.0}};
  EXPECT_EQ(json(o).get<ReproductionOutcome>(), o);
}

TEST(RemoteBackendTest, MatchesInProcessSimulator) {
  Simulator local(memory_resolver());
  Simulator served(memory_resolver());
  local.add_scenario(scenario());
  served.add_scenario(scenario());
  BackendServer server(served);
  server.start();
  RemoteBackend remote(server.base_url(), std::chrono::milliseconds(5));
  for (const std::string& p : {std::string(), edit("return x;", "return 0;"),
                               edit("int g", "#error\nint g")}) {
    const auto want = local.submit_build(job(p)).get();
    const auto got = remote.submit_build(job(p)).get();
    EXPECT_EQ(got, want);
    if (!want.ok) continue;
    const ReproductionJob r{want.kernel_artifact_ref, "r", 7, 11};
    EXPECT_EQ(remote.submit_reproduction(r).get(), local.submit_reproduction(r).get());
  }
  EXPECT_THROW(remote.submit_reproduction({"kernel:missing", "r", 1, 0}).get(),
               UnknownKernelArtifact);
  server.stop();
}

TEST(RemoteBackendTest, UnreachableEndpointIsUnavailable) {
  RemoteBackend remote("http://127.0.0.1:9", std::chrono::milliseconds(5));
  EXPECT_THROW(remote.submit_build(job("")).get(), BackendUnavailable);
}

}  // namespace
}  // namespace crashbench::exec
