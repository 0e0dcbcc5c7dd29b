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

#include "crashbench/corpus.hpp"

#include <algorithm>
#include <set>

#include "crashbench/digest.hpp"
#include "crashbench/fs.hpp"
#include "crashbench/http.hpp"
#include "crashbench/patch.hpp"

namespace crashbench::corpus {
namespace {

using nlohmann::json;

const json* find(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return nullptr;
  return &*it;
}

std::string required_string(const json& j, const char* key,
                            const std::string& label) {
  const json* v = find(j, key);
  if (!v) throw MissingField(label);
  if (!v->is_string()) throw InvalidField(label, "expected a string");
  return v->get<std::string>();
}

std::string optional_string(const json& j, const char* key) {
  const json* v = find(j, key);
  if (!v) return "";
  if (!v->is_string()) throw InvalidField(key, "expected a string");
  return v->get<std::string>();
}

// Either an inline body under `key` or a ready-made ref under `key`_ref.
std::optional<std::string> blob_field(const json& raw, const std::string& key,
                                      const BlobStore* blobs) {
  const std::string ref_key = key + "_ref";
  if (find(raw, ref_key.c_str())) {
    return required_string(raw, ref_key.c_str(), ref_key);
  }
  if (!find(raw, key.c_str())) return std::nullopt;
  const std::string body = required_string(raw, key.c_str(), key);
  return blobs ? blobs->put(body) : content_ref(body);
}

FixRecord ingest_fix(const json& f, const Date& reported) {
  FixRecord fix;
  fix.fixed_date = Date::parse(required_string(f, "fixed_date", "fix.fixed_date"));
  fix.fix_commit = required_string(f, "fix_commit", "fix.fix_commit");
  fix.commit_message = optional_string(f, "commit_message");
  fix.dev_patch = required_string(f, "dev_patch", "fix.dev_patch");
  if (patch::parse_unified_diff(fix.dev_patch).empty()) {
    throw InvalidField("fix.dev_patch", "developer patch is empty");
  }
  if (fix.fixed_date < reported) {
    throw InvalidField("fix.fixed_date", "precedes reported_date");
  }
  return fix;
}

json dump_optional_rate(const std::optional<double>& r) {
  return r ? json(*r) : json(nullptr);
}

}  // namespace

void to_json(json& j, const FixRecord& v) {
  j = {{"fixed_date", v.fixed_date.iso()},
       {"fix_commit", v.fix_commit},
       {"commit_message", v.commit_message},
       {"dev_patch", v.dev_patch}};
}

void from_json(const json& j, FixRecord& v) {
  v.fixed_date = Date::parse(j.at("fixed_date").get<std::string>());
  v.fix_commit = j.at("fix_commit").get<std::string>();
  v.commit_message = j.value("commit_message", "");
  v.dev_patch = j.at("dev_patch").get<std::string>();
}

void to_json(json& j, const BugRecord& v) {
  j = {{"bug_id", v.bug_id},
       {"title", v.title},
       {"subsystem", v.subsystem},
       {"bug_type", v.bug_type},
       {"reported_date", v.reported_date.iso()},
       {"kernel_commit", v.kernel_commit},
       {"kernel_config", v.kernel_config},
       {"reproducer", v.reproducer},
       {"crash_report", v.crash_report},
       {"fix", v.fix ? json(*v.fix) : json(nullptr)},
       {"reproduction_rate", dump_optional_rate(v.reproduction_rate)}};
}

void from_json(const json& j, BugRecord& v) {
  v.bug_id = j.at("bug_id").get<std::string>();
  v.title = j.value("title", "");
  v.subsystem = j.value("subsystem", "");
  v.bug_type = j.value("bug_type", "");
  v.reported_date = Date::parse(j.at("reported_date").get<std::string>());
  v.kernel_commit = j.at("kernel_commit").get<std::string>();
  v.kernel_config = j.value("kernel_config", "");
  v.reproducer = j.at("reproducer").get<std::string>();
  v.crash_report = j.at("crash_report").get<std::string>();
  v.fix.reset();
  if (const json* f = find(j, "fix")) v.fix = f->get<FixRecord>();
  v.reproduction_rate.reset();
  if (const json* r = find(j, "reproduction_rate")) {
    v.reproduction_rate = r->get<double>();
  }
}

void to_json(json& j, const CurationResult& v) {
  j = {{"bug_id", v.bug_id},
       {"admitted", v.admitted},
       {"attempts", v.attempts},
       {"observed", v.observed},
       {"reason", v.reason}};
}

void from_json(const json& j, CurationResult& v) {
  v.bug_id = j.at("bug_id").get<std::string>();
  v.admitted = j.at("admitted").get<bool>();
  v.attempts = j.at("attempts").get<int>();
  v.observed = j.at("observed").get<int>();
  v.reason = j.value("reason", "");
}

void to_json(json& j, const DatasetCard& v) {
  j = {{"n_bugs", v.n_bugs},
       {"n_subsystems", v.n_subsystems},
       {"n_bug_types", v.n_bug_types},
       {"n_fixed", v.n_fixed},
       {"avg_fixed_per_month", v.avg_fixed_per_month},
       {"avg_gold_patch_loc", v.avg_gold_patch_loc},
       {"avg_gold_patch_files", v.avg_gold_patch_files},
       {"median_days_report_to_fix", v.median_days_report_to_fix}};
}

std::filesystem::path BlobStore::path_of(const std::string& ref) const {
  constexpr std::string_view kPrefix = "sha256:";
  std::string_view hex = ref;
  if (hex.substr(0, kPrefix.size()) == kPrefix) hex.remove_prefix(kPrefix.size());
  const bool ok = hex.size() == 64 &&
                  std::all_of(hex.begin(), hex.end(), [](char c) {
                    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
                  });
  if (!ok) throw InvalidField("blob_ref", "not a sha256 reference: " + ref);
  return dir_ / std::string(hex);
}

std::string BlobStore::put(std::string_view data) const {
  const std::string ref = content_ref(data);
  const auto path = path_of(ref);
  if (!std::filesystem::exists(path)) write_file_atomic(path, data);
  return ref;
}

std::optional<std::string> BlobStore::get(const std::string& ref) const {
  return read_file(path_of(ref));
}

bool BlobStore::contains(const std::string& ref) const {
  return std::filesystem::exists(path_of(ref));
}

bool valid_bug_id(std::string_view id) {
  if (id.empty() || id.size() > 128 || id == "." || id == ".." ||
      id == "blobs") {
    return false;
  }
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
  });
}

BugRecord ingest_report(const json& raw, const BlobStore* blobs) {
  if (!raw.is_object()) throw InvalidField("report", "expected an object");
  BugRecord r;
  r.bug_id = required_string(raw, "bug_id", "bug_id");
  if (!valid_bug_id(r.bug_id)) {
    throw InvalidField("bug_id", "must match [A-Za-z0-9._-]+");
  }
  r.reported_date =
      Date::parse(required_string(raw, "reported_date", "reported_date"));
  r.kernel_commit = required_string(raw, "kernel_commit", "kernel_commit");
  r.crash_report = required_string(raw, "crash_report", "crash_report");
  auto repro = blob_field(raw, "reproducer", blobs);
  if (!repro) throw MissingField("reproducer");
  r.reproducer = *repro;
  r.kernel_config = blob_field(raw, "kernel_config", blobs).value_or("");
  r.title = optional_string(raw, "title");
  r.subsystem = optional_string(raw, "subsystem");
  r.bug_type = optional_string(raw, "bug_type");

  if (const json* f = find(raw, "fix")) {
    if (!f->is_object()) throw InvalidField("fix", "expected an object");
    r.fix = ingest_fix(*f, r.reported_date);
  } else if (find(raw, "fixed_date") || find(raw, "dev_patch")) {
    r.fix = ingest_fix(raw, r.reported_date);
  }
  return r;
}

CorpusStore::CorpusStore(std::filesystem::path root)
    : root_(std::move(root)), blobs_(root_ / "blobs") {}

WriteOutcome CorpusStore::put(const BugRecord& record) const {
  if (!valid_bug_id(record.bug_id)) {
    throw InvalidField("bug_id", "must match [A-Za-z0-9._-]+");
  }
  const auto path = root_ / record.bug_id / "record.json";
  const std::string body = json(record).dump(2) + "\n";
  const auto existing = read_file(path);
  if (existing && *existing == body) return WriteOutcome::kUnchanged;
  write_file_atomic(path, body);
  return existing ? WriteOutcome::kUpdated : WriteOutcome::kCreated;
}

std::optional<BugRecord> CorpusStore::get(const std::string& bug_id) const {
  if (!valid_bug_id(bug_id)) return std::nullopt;
  auto body = read_file(root_ / bug_id / "record.json");
  if (!body) return std::nullopt;
  return json::parse(*body).get<BugRecord>();
}

std::vector<std::string> CorpusStore::ids() const {
  std::vector<std::string> out;
  if (!std::filesystem::is_directory(root_)) return out;
  for (const auto& e : std::filesystem::directory_iterator(root_)) {
    if (e.is_directory() && std::filesystem::exists(e.path() / "record.json")) {
      out.push_back(e.path().filename().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<BugRecord> CorpusStore::load_all() const {
  std::vector<BugRecord> out;
  for (const auto& id : ids()) {
    if (auto r = get(id)) out.push_back(std::move(*r));
  }
  return out;
}

WriteOutcome CorpusStore::put_curation(const CurationResult& result) const {
  const auto path = root_ / result.bug_id / "curation.json";
  const std::string body = json(result).dump(2) + "\n";
  const auto existing = read_file(path);
  if (existing && *existing == body) return WriteOutcome::kUnchanged;
  write_file_atomic(path, body);
  return existing ? WriteOutcome::kUpdated : WriteOutcome::kCreated;
}

std::optional<CurationResult> CorpusStore::curation(
    const std::string& bug_id) const {
  if (!valid_bug_id(bug_id)) return std::nullopt;
  auto body = read_file(root_ / bug_id / "curation.json");
  if (!body) return std::nullopt;
  return json::parse(*body).get<CurationResult>();
}

std::vector<json> DirectoryFetcher::fetch() {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir_)) {
    if (e.is_regular_file() && e.path().extension() == ".json") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<json> out;
  for (const auto& f : files) {
    auto doc = json::parse(read_file(f).value_or(""));
    if (doc.is_array()) {
      for (auto& d : doc) out.push_back(std::move(d));
    } else {
      out.push_back(std::move(doc));
    }
  }
  return out;
}

std::vector<json> FeedFetcher::fetch() {
  std::vector<json> out;
  std::set<long> seen;
  long page = 1;
  for (;;) {
    if (!seen.insert(page).second) {
      throw Error("FeedError", "feed pagination loops at page " +
                                   std::to_string(page));
    }
    auto res = http::get(base_url_, path_ + "?page=" + std::to_string(page));
    if (!res) throw Error("FeedError", "cannot reach " + base_url_);
    if (res->status != 200) {
      throw Error("FeedError", "feed returned HTTP " + std::to_string(res->status));
    }
    const auto doc = json::parse(res->body);
    for (const auto& r : doc.at("reports")) out.push_back(r);
    const json* next = find(doc, "next_page");
    if (!next) break;
    page = next->get<long>();
  }
  return out;
}

CurationResult filter_reproducible(const BugRecord& bug,
                                   exec::ExecutionBackend& backend,
                                   int attempts, std::uint64_t seed) {
  if (attempts < 1) throw InvalidField("attempts", "must be at least 1");
  CurationResult result;
  result.bug_id = bug.bug_id;
  result.attempts = attempts;

  exec::BuildJob build;
  build.bug_id = bug.bug_id;
  build.source_ref = bug.kernel_commit;
  build.config_ref = bug.kernel_config;
  const exec::BuildResult built = backend.submit_build(build).get();
  if (!built.ok) {
    result.reason = "BuildFailed: " + built.log;
    return result;
  }

  exec::ReproductionJob repro;
  repro.kernel_artifact_ref = built.kernel_artifact_ref;
  repro.reproducer_ref = bug.reproducer;
  repro.trials = attempts;
  repro.seed = seed;
  const exec::ReproductionOutcome outcome =
      backend.submit_reproduction(repro).get();
  result.observed = outcome.crash_count();
  result.admitted = result.observed > 0;
  if (!result.admitted) {
    result.reason = "NotReproduced: 0/" + std::to_string(attempts) + " trials";
  }
  return result;
}

void apply_curation(BugRecord& bug, const CurationResult& result) {
  if (result.admitted) {
    bug.reproduction_rate = result.rate();
  } else {
    bug.reproduction_rate.reset();
  }
}

DatasetCard dataset_stats(const std::vector<BugRecord>& corpus) {
  if (corpus.empty()) throw EmptyCorpus();
  DatasetCard card;
  card.n_bugs = long(corpus.size());
  std::set<std::string> subsystems;
  std::set<std::string> types;
  std::vector<long> gaps;
  long loc = 0;
  long files = 0;
  std::optional<Date> first;
  std::optional<Date> last;
  for (const auto& b : corpus) {
    if (!b.subsystem.empty()) subsystems.insert(b.subsystem);
    if (!b.bug_type.empty()) types.insert(b.bug_type);
    if (!b.fix) continue;
    ++card.n_fixed;
    const auto size = patch::patch_size(patch::parse_unified_diff(b.fix->dev_patch));
    loc += size.loc;
    files += size.files;
    gaps.push_back(days_between(b.reported_date, b.fix->fixed_date));
    const Date& d = b.fix->fixed_date;
    if (!first || d < *first) first = d;
    if (!last || *last < d) last = d;
  }
  card.n_subsystems = long(subsystems.size());
  card.n_bug_types = long(types.size());
  if (card.n_fixed == 0) return card;

  const long months = last->month_index() - first->month_index() + 1;
  card.avg_fixed_per_month = double(card.n_fixed) / double(months);
  card.avg_gold_patch_loc = double(loc) / double(card.n_fixed);
  card.avg_gold_patch_files = double(files) / double(card.n_fixed);
  std::sort(gaps.begin(), gaps.end());
  const std::size_t n = gaps.size();
  card.median_days_report_to_fix =
      n % 2 ? double(gaps[n / 2])
            : (double(gaps[n / 2 - 1]) + double(gaps[n / 2])) / 2.0;
  return card;
}

CutoffSplit split_by_cutoff(const std::vector<BugRecord>& corpus,
                            const Date& cutoff) {
  CutoffSplit out;
  for (const auto& b : corpus) {
    if (!b.fix) continue;
    (b.fix->fixed_date <= cutoff ? out.before : out.after).push_back(b);
  }
  return out;
}

}  // namespace crashbench::corpus
