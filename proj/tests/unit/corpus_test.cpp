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

#include "crashbench/corpus.hpp"
#include "crashbench/fs.hpp"
#include "crashbench/http.hpp"
#include "crashbench/simulator.hpp"
#include "test_util.hpp"

namespace crashbench::corpus {
namespace {

using nlohmann::json;
using testing::TempDir;

const char* kPatch2 = "--- a/a.c\n+++ b/a.c\n@@ -1 +1 @@\n-x\n+y\n";
const char* kPatch4 =
    "--- a/a.c\n+++ b/a.c\n@@ -1 +1 @@\n-x\n+y\n"
    "--- a/b.c\n+++ b/b.c\n@@ -1 +1 @@\n-x\n+y\n";

json report(const std::string& id) {
  return {{"bug_id", id},
          {"title", "KASAN: use-after-free in foo"},
          {"subsystem", "net"},
          {"bug_type", "use-after-free"},
          {"reported_date", "2024-01-01"},
          {"kernel_commit", "v1"},
          {"kernel_config", "CONFIG_KASAN=y\n"},
          {"reproducer", "r0 = socket()\n"},
          {"crash_report", "BUG: KASAN"}};
}

BugRecord bug(const std::string& id, const std::string& reported,
              const std::optional<std::string>& fixed, const std::string& subsystem,
              const std::string& type, const std::string& patch = kPatch2) {
  BugRecord b;
  b.bug_id = id;
  b.subsystem = subsystem;
  b.bug_type = type;
  b.reported_date = Date::parse(reported);
  b.kernel_commit = "v1";
  b.crash_report = "BUG";
  if (fixed) b.fix = FixRecord{Date::parse(*fixed), "c0ffee", "fix", patch};
  return b;
}

TEST(IngestTest, BuildsRecordAndStoresBlobs) {
  TempDir dir;
  BlobStore blobs(dir.path());
  json r = report("b1");
  r["fix"] = {{"fixed_date", "2024-01-05T10:00:00Z"},
              {"fix_commit", "abc"},
              {"commit_message", "net: fix uaf"},
              {"dev_patch", kPatch2}};
  const BugRecord b = ingest_report(r, &blobs);
  EXPECT_EQ(b.bug_id, "b1");
  ASSERT_TRUE(b.is_fixed());
  EXPECT_EQ(b.fix->fixed_date.iso(), "2024-01-05");
  EXPECT_EQ(blobs.get(b.reproducer), "r0 = socket()\n");
  EXPECT_EQ(blobs.get(b.kernel_config), "CONFIG_KASAN=y\n");
  EXPECT_FALSE(b.curated());
}

TEST(IngestTest, AcceptsFlatFixFields) {
  json r = report("b1");
  r["fixed_date"] = "2024-02-01";
  r["fix_commit"] = "abc";
  r["dev_patch"] = kPatch2;
  EXPECT_TRUE(ingest_report(r).is_fixed());
}

TEST(IngestTest, MissingMandatoryFieldsAreRejected) {
  for (const char* field :
       {"bug_id", "reported_date", "kernel_commit", "crash_report", "reproducer"}) {
    json r = report("b1");
    r.erase(field);
    EXPECT_THROW(ingest_report(r), MissingField) << field;
  }
  json r = report("b1");
  r["fix"] = {{"fixed_date", "2024-02-01"}, {"fix_commit", "abc"}};
  EXPECT_THROW(ingest_report(r), MissingField);
}

TEST(IngestTest, InvalidValuesAreRejected) {
  json r = report("b1");
  r["reported_date"] = "01/02/2024";
  EXPECT_THROW(ingest_report(r), MalformedDate);
  r = report("../escape");
  EXPECT_THROW(ingest_report(r), InvalidField);
  r = report("b1");
  r["fix"] = {{"fixed_date", "2023-12-01"}, {"fix_commit", "a"}, {"dev_patch", kPatch2}};
  EXPECT_THROW(ingest_report(r), InvalidField);
  r["fix"] = {{"fixed_date", "2024-12-01"}, {"fix_commit", "a"}, {"dev_patch", ""}};
  EXPECT_THROW(ingest_report(r), InvalidField);
}

TEST(BlobStoreTest, ContentAddressed) {
  TempDir dir;
  BlobStore blobs(dir.path());
  const std::string ref = blobs.put("hello");
  EXPECT_EQ(ref, blobs.put("hello"));
  EXPECT_TRUE(blobs.contains(ref));
  EXPECT_EQ(blobs.get(ref), "hello");
  EXPECT_FALSE(blobs.get("sha256:" + std::string(64, 'a')).has_value());
  EXPECT_THROW(blobs.get("md5:abc"), InvalidField);
}

TEST(CorpusStoreTest, WriteOutcomesAndReload) {
  TempDir dir;
  CorpusStore store(dir.path());
  BugRecord b = bug("b1", "2024-01-01", "2024-01-10", "net", "uaf");
  EXPECT_EQ(store.put(b), WriteOutcome::kCreated);
  EXPECT_EQ(store.put(b), WriteOutcome::kUnchanged);
  b.title = "renamed";
  EXPECT_EQ(store.put(b), WriteOutcome::kUpdated);
  EXPECT_EQ(store.get("b1"), b);
  store.put(bug("a0", "2024-01-01", std::nullopt, "fs", "gpf"));
  EXPECT_EQ(store.ids(), (std::vector<std::string>{"a0", "b1"}));
  EXPECT_EQ(store.load_all().size(), 2u);
  EXPECT_FALSE(store.get("zz").has_value());

  const CurationResult c{"b1", true, 5, 4, ""};
  store.put_curation(c);
  EXPECT_EQ(store.curation("b1"), c);
  EXPECT_FALSE(store.curation("a0").has_value());
}

TEST(CorpusStoreTest, RecordJsonRoundTrips) {
  BugRecord b = bug("b1", "2024-01-01", "2024-01-10", "net", "uaf");
  b.reproduction_rate = 0.8;
  EXPECT_EQ(json(b).get<BugRecord>(), b);
  const BugRecord open = bug("b2", "2024-01-01", std::nullopt, "net", "uaf");
  EXPECT_TRUE(json(open).at("fix").is_null());
  EXPECT_EQ(json(open).get<BugRecord>(), open);
}

TEST(FetcherTest, DirectoryFetcherReadsSortedFilesAndArrays) {
  TempDir dir;
  write_file_atomic(dir / "b.json", json::array({report("b2"), report("b3")}).dump());
  write_file_atomic(dir / "a.json", report("b1").dump());
  write_file_atomic(dir / "notes.txt", "ignored");
  const auto docs = DirectoryFetcher(dir.path()).fetch();
  ASSERT_EQ(docs.size(), 3u);
  EXPECT_EQ(docs[0].at("bug_id"), "b1");
  EXPECT_EQ(docs[2].at("bug_id"), "b3");
}

TEST(FetcherTest, FeedFetcherFollowsPages) {
  http::Service svc;
  svc.get("/reports", [](const http::Request& req) {
    const auto it = req.params.find("page");
    const std::string page = it == req.params.end() ? "1" : it->second;
    json body = {{"reports", json::array({report("p" + page)})}};
    body["next_page"] = page == "1" ? json(2) : json(nullptr);
    return http::Response{200, body.dump()};
  });
  svc.start();
  const auto docs = FeedFetcher(svc.base_url()).fetch();
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[1].at("bug_id"), "p2");
  svc.stop();
}

TEST(FetcherTest, FeedFetcherDetectsLoops) {
  http::Service svc;
  svc.get("/reports", [](const http::Request&) {
    return http::Response{200, json{{"reports", json::array()}, {"next_page", 1}}.dump()};
  });
  svc.start();
  EXPECT_THROW(FeedFetcher(svc.base_url()).fetch(), Error);
  svc.stop();
}

std::shared_ptr<exec::Simulator> simulator(double p) {
  auto tree = std::make_shared<patch::MemoryTree>();
  auto sim = std::make_shared<exec::Simulator>(
      [tree](const std::string&) -> std::shared_ptr<const patch::SourceTree> {
        return tree;
      });
  exec::SimScenario s;
  s.bug_id = "b1";
  s.crash_prob_unfixed = p;
  sim->add_scenario(s);
  return sim;
}

TEST(CurationTest, AdmitsWhenAnyAttemptCrashes) {
  auto sim = simulator(1.0);
  BugRecord b = bug("b1", "2024-01-01", std::nullopt, "net", "uaf");
  const auto r = filter_reproducible(b, *sim, 5, 1);
  EXPECT_TRUE(r.admitted);
  EXPECT_EQ(r.observed, 5);
  apply_curation(b, r);
  EXPECT_EQ(b.reproduction_rate, 1.0);
}

TEST(CurationTest, RejectsWhenNothingCrashes) {
  auto sim = simulator(0.0);
  BugRecord b = bug("b1", "2024-01-01", std::nullopt, "net", "uaf");
  const auto r = filter_reproducible(b, *sim, 5, 1);
  EXPECT_FALSE(r.admitted);
  EXPECT_EQ(r.reason.rfind("NotReproduced", 0), 0u);
  apply_curation(b, r);
  EXPECT_FALSE(b.curated());
  EXPECT_THROW(filter_reproducible(b, *sim, 0), InvalidField);
}

TEST(DatasetStatsTest, HandComputedCard) {
  // Two fixed bugs: 10 and 30 days to fix, fixes in January and March.
  const std::vector<BugRecord> corpus = {
      bug("a", "2024-01-01", "2024-01-11", "net", "uaf", kPatch2),
      bug("b", "2024-02-01", "2024-03-02", "fs", "uaf", kPatch4),
      bug("c", "2024-02-01", std::nullopt, "net", "gpf")};
  const DatasetCard card = dataset_stats(corpus);
  EXPECT_EQ(card.n_bugs, 3);
  EXPECT_EQ(card.n_subsystems, 2);
  EXPECT_EQ(card.n_bug_types, 2);
  EXPECT_EQ(card.n_fixed, 2);
  EXPECT_DOUBLE_EQ(card.avg_fixed_per_month, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(card.avg_gold_patch_loc, 3.0);
  EXPECT_DOUBLE_EQ(card.avg_gold_patch_files, 1.5);
  EXPECT_DOUBLE_EQ(card.median_days_report_to_fix, 20.0);
  EXPECT_THROW(dataset_stats({}), EmptyCorpus);
}

TEST(CutoffSplitTest, InclusiveBeforeAndOpenBugsExcluded) {
  const std::vector<BugRecord> corpus = {
      bug("a", "2024-01-01", "2024-06-30", "net", "uaf"),
      bug("b", "2024-01-01", "2024-07-01", "net", "uaf"),
      bug("c", "2024-01-01", std::nullopt, "net", "uaf")};
  const auto split = split_by_cutoff(corpus, Date::parse("2024-06-30"));
  ASSERT_EQ(split.before.size(), 1u);
  ASSERT_EQ(split.after.size(), 1u);
  EXPECT_EQ(split.before[0].bug_id, "a");
  EXPECT_EQ(split.after[0].bug_id, "b");
}

}  // namespace
}  // namespace crashbench::corpus
