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

#include "crashbench/env.hpp"

namespace crashbench::env {
namespace {

using nlohmann::json;

corpus::BugRecord curated_bug() {
  corpus::BugRecord b;
  b.bug_id = "b1";
  b.title = "KASAN: slab-out-of-bounds in foo_read";
  b.reported_date = Date::parse("2024-01-01");
  b.kernel_commit = "v6.8";
  b.kernel_config = "sha256:" + std::string(64, 'c');
  b.reproducer = "sha256:" + std::string(64, 'r');
  b.crash_report = "BUG: KASAN: slab-out-of-bounds in foo_read+0x10";
  b.reproduction_rate = 1.0;
  return b;
}

AgentOverlay overlay() {
  return AgentOverlay::from_json(json{
      {"name", "agent-a"},
      {"install_steps", {"pip install agent"}},
      {"invocation_template", "agent --model {model} --ctx {crash_context} {workspace}"},
      {"env_vars", {{"model", "m1"}}}});
}

TEST(CrashContextTest, ContainsReportReproducerAndToolInstructions) {
  BaseSpecOptions opts;
  opts.reproducer_text = "r0 = open()";
  const std::string ctx = render_crash_context(curated_bug(), opts);
  EXPECT_NE(ctx.find(kReportHeading), std::string::npos);
  EXPECT_NE(ctx.find("slab-out-of-bounds in foo_read+0x10"), std::string::npos);
  EXPECT_NE(ctx.find(kReproducerHeading), std::string::npos);
  EXPECT_NE(ctx.find("r0 = open()"), std::string::npos);
  EXPECT_NE(ctx.find(kToolHeading), std::string::npos);
  for (const char* header : {"CRASH_RESOLVED", "CRASH_REPRODUCED", "COMPILE_ERROR"}) {
    EXPECT_NE(ctx.find(header), std::string::npos) << header;
  }
  EXPECT_EQ(ctx.find(kOracleHeading), std::string::npos);
}

TEST(CrashContextTest, DisabledToolAndOracleMode) {
  BaseSpecOptions opts;
  opts.crf_tool.enabled = false;
  opts.oracle_mode = true;
  opts.oracle_files = {"drivers/foo.c"};
  const std::string ctx = render_crash_context(curated_bug(), opts);
  EXPECT_EQ(ctx.find("CRASH_RESOLVED"), std::string::npos);
  EXPECT_NE(ctx.find(kOracleHeading), std::string::npos);
  EXPECT_NE(ctx.find("drivers/foo.c"), std::string::npos);
}

TEST(BaseSpecTest, RejectsMissingReportAndUncuratedBugs) {
  auto b = curated_bug();
  b.crash_report.clear();
  EXPECT_THROW(build_base_spec(b), MissingCrashReport);
  b = curated_bug();
  b.reproduction_rate.reset();
  EXPECT_THROW(build_base_spec(b), InvalidField);
}

TEST(BaseSpecTest, CacheKeyTracksInputs) {
  const auto a = build_base_spec(curated_bug());
  EXPECT_EQ(a.source_ref, "v6.8");
  EXPECT_EQ(a.cache_key, build_base_spec(curated_bug()).cache_key);
  BaseSpecOptions off;
  off.crf_tool.enabled = false;
  EXPECT_NE(a.cache_key, build_base_spec(curated_bug(), off).cache_key);
}

TEST(BaseSpecTest, CacheReusesSpecs) {
  BaseSpecCache cache;
  const auto a = cache.get(curated_bug());
  const auto b = cache.get(curated_bug());
  EXPECT_EQ(a, b);
  EXPECT_EQ(cache.hits(), 1);
  EXPECT_EQ(cache.size(), 1);
}

TEST(OverlayTest, ValidatesManifest) {
  EXPECT_THROW(AgentOverlay::from_json(json{{"invocation_template", "x"}}), Error);
  EXPECT_THROW(AgentOverlay::from_json(json{{"name", "a"}}), Error);
  const auto o = overlay();
  EXPECT_EQ(AgentOverlay::from_json(o.to_json()), o);
}

TEST(OverlayTest, FindsPlaceholders) {
  EXPECT_EQ(template_placeholders("a {x} {y_2} {not closed {} {z}"),
            (std::vector<std::string>{"x", "y_2", "z"}));
}

TEST(ComposeTest, LayersBaseThenOverlay) {
  const auto spec = compose(build_base_spec(curated_bug()), overlay());
  ASSERT_EQ(spec.layers.size(), 2u);
  EXPECT_EQ(spec.layers[0].name.rfind("base:", 0), 0u);
  EXPECT_EQ(spec.layers[1].name, "overlay:agent-a");
  EXPECT_EQ(spec.layers[1].steps, (std::vector<std::string>{"pip install agent"}));
  EXPECT_EQ(spec.digest, compose(build_base_spec(curated_bug()), overlay()).digest);
  auto other = overlay();
  other.env_vars["model"] = "m2";
  EXPECT_NE(spec.digest, compose(build_base_spec(curated_bug()), other).digest);
}

TEST(ComposeTest, UndeclaredPlaceholderFails) {
  auto o = overlay();
  o.invocation_template = "agent {api_key}";
  try {
    compose(build_base_spec(curated_bug()), o);
    FAIL() << "expected PlaceholderUnresolved";
  } catch (const PlaceholderUnresolved& e) {
    EXPECT_EQ(e.name(), "api_key");
  }
}

TEST(ComposeTest, InvocationValuesAreShellQuoted) {
  auto o = overlay();
  o.env_vars["model"] = "it's; rm -rf /";
  EXPECT_EQ(render_invocation(o, "/c tx.md", "/ws"),
            "agent --model 'it'\\''s; rm -rf /' --ctx '/c tx.md' '/ws'");
}

}  // namespace
}  // namespace crashbench::env
