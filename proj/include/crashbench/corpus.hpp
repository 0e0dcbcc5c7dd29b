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

#ifndef CRASHBENCH_CORPUS_HPP_
#define CRASHBENCH_CORPUS_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "crashbench/date.hpp"
#include "crashbench/error.hpp"
#include "crashbench/exec_backend.hpp"
#include "json.hpp"

namespace crashbench::corpus {

class EmptyCorpus : public Error {
 public:
  EmptyCorpus() : Error("EmptyCorpus", "corpus is empty") {}
};

struct FixRecord {
  Date fixed_date;
  std::string fix_commit;
  std::string commit_message;
  std::string dev_patch;  // unified diff, stored inline

  friend bool operator==(const FixRecord&, const FixRecord&) = default;
};

struct BugRecord {
  std::string bug_id;
  std::string title;
  std::string subsystem;
  std::string bug_type;
  Date reported_date;
  std::string kernel_commit;
  std::string kernel_config;  // blob reference, may be empty
  std::string reproducer;     // blob reference
  std::string crash_report;
  std::optional<FixRecord> fix;
  std::optional<double> reproduction_rate;  // set once curation admits it

  bool is_fixed() const { return fix.has_value(); }
  bool curated() const { return reproduction_rate.has_value(); }

  friend bool operator==(const BugRecord&, const BugRecord&) = default;
};

void to_json(nlohmann::json& j, const FixRecord& v);
void from_json(const nlohmann::json& j, FixRecord& v);
void to_json(nlohmann::json& j, const BugRecord& v);
void from_json(const nlohmann::json& j, BugRecord& v);

// Content-addressed blob directory. Refs look like "sha256:<hex>"; the file
// name is the bare hex digest.
class BlobStore {
 public:
  explicit BlobStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::string put(std::string_view data) const;
  std::optional<std::string> get(const std::string& ref) const;
  bool contains(const std::string& ref) const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path path_of(const std::string& ref) const;
  std::filesystem::path dir_;
};

// Maps a raw report document to a BugRecord. Inline reproducer/config bodies
// ("reproducer", "kernel_config") are written to `blobs` when given and
// replaced by their refs; "reproducer_ref"/"kernel_config_ref" pass through.
BugRecord ingest_report(const nlohmann::json& raw,
                        const BlobStore* blobs = nullptr);

bool valid_bug_id(std::string_view id);

enum class WriteOutcome { kCreated, kUpdated, kUnchanged };

struct CurationResult {
  std::string bug_id;
  bool admitted = false;
  int attempts = 0;
  int observed = 0;
  std::string reason;  // set when rejected

  double rate() const { return attempts ? double(observed) / attempts : 0.0; }
  friend bool operator==(const CurationResult&,
                         const CurationResult&) = default;
};

void to_json(nlohmann::json& j, const CurationResult& v);
void from_json(const nlohmann::json& j, CurationResult& v);

// On-disk corpus: <root>/<bug_id>/record.json, <root>/<bug_id>/curation.json
// and <root>/blobs/<hex>. Writes go through a temp file and rename.
class CorpusStore {
 public:
  explicit CorpusStore(std::filesystem::path root);

  WriteOutcome put(const BugRecord& record) const;
  std::optional<BugRecord> get(const std::string& bug_id) const;
  std::vector<std::string> ids() const;
  std::vector<BugRecord> load_all() const;

  WriteOutcome put_curation(const CurationResult& result) const;
  std::optional<CurationResult> curation(const std::string& bug_id) const;

  const BlobStore& blobs() const { return blobs_; }
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  BlobStore blobs_;
};

// Source of raw report documents.
class Fetcher {
 public:
  virtual ~Fetcher() = default;
  virtual std::vector<nlohmann::json> fetch() = 0;
};

// Every *.json file in a directory, in file-name order. A file may hold one
// document or an array of them.
class DirectoryFetcher final : public Fetcher {
 public:
  explicit DirectoryFetcher(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::vector<nlohmann::json> fetch() override;

 private:
  std::filesystem::path dir_;
};

// Paginated feed: GET <path>?page=N -> {"reports": [...], "next_page": N|null}.
class FeedFetcher final : public Fetcher {
 public:
  FeedFetcher(std::string base_url, std::string path = "/reports")
      : base_url_(std::move(base_url)), path_(std::move(path)) {}
  std::vector<nlohmann::json> fetch() override;

 private:
  std::string base_url_;
  std::string path_;
};

// Builds the unpatched tree, then runs `attempts` reproduction trials. The
// bug is admitted iff at least one trial crashes.
CurationResult filter_reproducible(const BugRecord& bug,
                                   exec::ExecutionBackend& backend,
                                   int attempts = 5, std::uint64_t seed = 0);

// Stamps (or clears) reproduction_rate from a curation decision.
void apply_curation(BugRecord& bug, const CurationResult& result);

struct DatasetCard {
  long n_bugs = 0;
  long n_subsystems = 0;
  long n_bug_types = 0;
  long n_fixed = 0;
  double avg_fixed_per_month = 0.0;
  double avg_gold_patch_loc = 0.0;
  double avg_gold_patch_files = 0.0;
  double median_days_report_to_fix = 0.0;

  friend bool operator==(const DatasetCard&, const DatasetCard&) = default;
};

void to_json(nlohmann::json& j, const DatasetCard& v);

DatasetCard dataset_stats(const std::vector<BugRecord>& corpus);

struct CutoffSplit {
  std::vector<BugRecord> before;  // fixed on or before the cutoff
  std::vector<BugRecord> after;
};

CutoffSplit split_by_cutoff(const std::vector<BugRecord>& corpus,
                            const Date& cutoff);

}  // namespace crashbench::corpus

#endif  // CRASHBENCH_CORPUS_HPP_
