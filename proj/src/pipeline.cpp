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

#include "crashbench/pipeline.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "crashbench/corpus.hpp"
#include "crashbench/crf.hpp"
#include "crashbench/dashboard.hpp"
#include "crashbench/digest.hpp"
#include "crashbench/fs.hpp"
#include "crashbench/metrics.hpp"
#include "crashbench/patch.hpp"
#include "crashbench/remote_backend.hpp"
#include "crashbench/simulator.hpp"
#include "crashbench/store.hpp"

namespace crashbench::pipeline {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal();
}

std::string relative_to(const fs::path& p, const fs::path& base) {
  if (p.empty()) return "";
  return p.lexically_relative(base).generic_string();
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

std::optional<double> optional_number(const json& j, const char* key,
                                      std::optional<double> fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (it->is_null()) return std::nullopt;
  if (!it->is_number()) {
    throw ConfigError(std::string("field '") + key + "' must be a number");
  }
  return it->get<double>();
}

json optional_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

fs::path self_dir() {
  std::error_code ec;
  const auto exe = fs::read_symlink("/proc/self/exe", ec);
  return ec ? fs::current_path() : exe.parent_path();
}

// Runs fn(0..n-1) on up to `workers` threads; rethrows the first failure
// after all workers stop picking up new items.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      if (failed) return;
      const std::size_t i = next++;
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
        failed = true;
      }
    }
  };
  const int count = std::max(1, std::min<int>(workers, int(n)));
  std::vector<std::thread> threads;
  for (int i = 1; i < count; ++i) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (first) std::rethrow_exception(first);
}

class ExperimentLock {
 public:
  explicit ExperimentLock(const fs::path& path) {
    fs::create_directories(path.parent_path());
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error("LockError", "cannot open " + path.string());
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw Error("ExperimentLocked",
                  "another pipeline holds " + path.string());
    }
  }
  ~ExperimentLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  ExperimentLock(const ExperimentLock&) = delete;
  ExperimentLock& operator=(const ExperimentLock&) = delete;

 private:
  int fd_ = -1;
};

struct Context {
  const ExperimentConfig& config;
  const PipelineOptions& options;
  corpus::CorpusStore corpus;
  dashboard::Store& store;
  exec::ExecutionBackend& backend;
  eval::ResultStore results;
  std::mutex log_mu;

  void log(const std::string& line) {
    if (!options.log) return;
    std::lock_guard<std::mutex> lock(log_mu);
    *options.log << line << "\n";
  }
};

struct RunKey {
  std::string bug_id;
  const AgentSpec* agent;
  int attempt;
};

std::vector<RunKey> run_space(const std::vector<corpus::BugRecord>& bugs,
                              const ExperimentConfig& config) {
  std::vector<RunKey> keys;
  for (const auto& b : bugs) {
    if (!b.curated()) continue;
    for (const auto& a : config.agents) {
      for (int i = 1; i <= config.attempts; ++i) keys.push_back({b.bug_id, &a, i});
    }
  }
  return keys;
}

dashboard::AgentInfo agent_info(const ExperimentConfig& c, const AgentSpec& a) {
  dashboard::AgentInfo info;
  info.experiment = c.experiment;
  info.agent_name = a.overlay.name;
  info.scaffold = a.scaffold;
  info.model = a.model;
  info.crf_enabled = a.crf_enabled;
  info.oracle_mode = a.oracle_mode;
  info.cost_limit = a.budget_usd ? a.budget_usd : c.limits.budget_usd;
  return info;
}

StageSummary stage_ingest(Context& ctx) {
  const auto& c = ctx.config;
  std::unique_ptr<corpus::Fetcher> fetcher;
  if (!c.reports_feed.empty()) {
    fetcher = std::make_unique<corpus::FeedFetcher>(c.reports_feed);
  } else {
    fetcher = std::make_unique<corpus::DirectoryFetcher>(c.reports_dir);
  }
  StageSummary s{Stage::kIngest};
  long created = 0, updated = 0, unchanged = 0, rejected = 0;
  json errors = json::array();
  const auto docs = fetcher->fetch();
  for (const auto& doc : docs) {
    corpus::BugRecord rec;
    try {
      rec = corpus::ingest_report(doc, &ctx.corpus.blobs());
    } catch (const Error& e) {
      ++rejected;
      errors.push_back({{"bug_id", doc.value("bug_id", json(nullptr))},
                        {"error", e.code()},
                        {"message", e.what()}});
      continue;
    }
    if (auto existing = ctx.corpus.get(rec.bug_id)) {
      rec.reproduction_rate = existing->reproduction_rate;
    }
    switch (ctx.corpus.put(rec)) {
      case corpus::WriteOutcome::kCreated:
        ++created;
        break;
      case corpus::WriteOutcome::kUpdated:
        ++updated;
        break;
      case corpus::WriteOutcome::kUnchanged:
        ++unchanged;
        break;
    }
    ctx.store.upsert_bug(rec);
  }
  s.counts = {{"documents", docs.size()}, {"created", created},
              {"updated", updated},       {"unchanged", unchanged},
              {"rejected", rejected},     {"errors", errors}};
  s.up_to_date = created == 0 && updated == 0;
  return s;
}

StageSummary stage_curate(Context& ctx) {
  const auto bugs = ctx.corpus.load_all();
  std::vector<corpus::BugRecord> todo;
  long admitted = 0, rejected = 0;
  for (const auto& b : bugs) {
    if (auto prior = ctx.corpus.curation(b.bug_id)) {
      (prior->admitted ? admitted : rejected)++;
      ctx.store.put_curation(*prior);
      continue;
    }
    todo.push_back(b);
  }
  std::atomic<long> new_admitted{0}, new_rejected{0};
  parallel_for(todo.size(), ctx.config.pool_size, [&](std::size_t i) {
    corpus::BugRecord bug = todo[i];
    const auto result = corpus::filter_reproducible(
        bug, ctx.backend, ctx.config.curation_attempts, ctx.config.seed);
    corpus::apply_curation(bug, result);
    ctx.corpus.put(bug);
    ctx.corpus.put_curation(result);
    ctx.store.upsert_bug(bug);
    ctx.store.put_curation(result);
    (result.admitted ? new_admitted : new_rejected)++;
    ctx.log("curate " + bug.bug_id + ": " +
            (result.admitted ? "admitted " : "rejected ") +
            std::to_string(result.observed) + "/" +
            std::to_string(result.attempts));
  });
  StageSummary s{Stage::kCurate};
  s.counts = {{"bugs", bugs.size()},
              {"curated", todo.size()},
              {"admitted", admitted + new_admitted},
              {"rejected", rejected + new_rejected}};
  s.up_to_date = todo.empty();
  return s;
}

StageSummary stage_run(Context& ctx) {
  const auto& c = ctx.config;
  const auto bugs = ctx.corpus.load_all();
  for (const auto& a : c.agents) ctx.store.upsert_agent(agent_info(c, a));

  std::vector<RunKey> todo;
  const auto space = run_space(bugs, c);
  for (const auto& k : space) {
    if (!ctx.store.has_run(c.experiment, k.bug_id, k.agent->overlay.name,
                           k.attempt)) {
      todo.push_back(k);
    }
  }
  StageSummary s{Stage::kRun};
  s.up_to_date = todo.empty();
  if (todo.empty()) {
    s.counts = {{"planned", space.size()}, {"executed", 0}};
    return s;
  }

  crf::GatewayConfig gw_config;
  gw_config.crf_trials = c.crf_trials;
  gw_config.seed = c.seed;
  if (c.pricing) gw_config.pricing = *c.pricing;
  const corpus::CorpusStore& corpus_store = ctx.corpus;
  crf::Gateway gateway(
      ctx.backend,
      [&corpus_store](const std::string& id) { return corpus_store.get(id); },
      gw_config);
  crf::GatewayServer server(gateway);
  server.start();

  env::InvokerConfig inv;
  inv.trees_root = c.trees;
  inv.sandbox_root = c.sandbox;
  inv.run_kernel_binary =
      c.run_kernel.empty() ? self_dir() / "run_kernel" : c.run_kernel;
  inv.gateway_url = server.base_url();

  env::BaseSpecCache cache;
  std::map<std::string, corpus::BugRecord> by_id;
  for (const auto& b : bugs) by_id[b.bug_id] = b;

  std::map<std::string, long> statuses;
  std::mutex status_mu;
  parallel_for(todo.size(), c.pool_size, [&](std::size_t i) {
    const RunKey& k = todo[i];
    const corpus::BugRecord& bug = by_id.at(k.bug_id);
    env::BaseSpecOptions opts;
    opts.crf_tool.enabled = k.agent->crf_enabled;
    opts.crf_tool.gateway_endpoint = "crashbench-gateway";
    opts.oracle_mode = k.agent->oracle_mode;
    if (opts.oracle_mode && bug.fix) {
      for (const auto& d : patch::parse_unified_diff(bug.fix->dev_patch).files) {
        if (!d.is_mode_only()) opts.oracle_files.push_back(d.path());
      }
    }
    opts.reproducer_text = ctx.corpus.blobs().get(bug.reproducer);
    const auto spec = env::compose(cache.get(bug, opts), k.agent->overlay);
    env::Limits limits = c.limits;
    if (k.agent->budget_usd) limits.budget_usd = k.agent->budget_usd;
    const auto artifact = env::invoke_agent(spec, limits, k.attempt, inv);
    ctx.store.insert_run(c.experiment, artifact);
    {
      std::lock_guard<std::mutex> lock(status_mu);
      ++statuses[env::to_string(artifact.exit_status)];
    }
    ctx.log("run " + k.bug_id + " " + k.agent->overlay.name + " #" +
            std::to_string(k.attempt) + ": " +
            env::to_string(artifact.exit_status));
  });
  server.stop();
  s.counts = {{"planned", space.size()},
              {"executed", todo.size()},
              {"exit_status", statuses},
              {"crf_calls", gateway.calls().size()}};
  return s;
}

StageSummary stage_evaluate(Context& ctx, eval::JudgeClient& judge) {
  const auto& c = ctx.config;
  const auto bugs = ctx.corpus.load_all();
  std::map<std::string, corpus::BugRecord> by_id;
  for (const auto& b : bugs) by_id[b.bug_id] = b;

  std::vector<RunKey> present;
  for (const auto& k : run_space(bugs, c)) {
    if (ctx.store.has_run(c.experiment, k.bug_id, k.agent->overlay.name,
                          k.attempt)) {
      present.push_back(k);
    }
  }
  if (present.empty()) {
    throw StageFailed("evaluate", "missing artifacts: no agent runs recorded");
  }

  eval::EvalConfig ec;
  ec.experiment = c.experiment;
  ec.crash.runs = c.runs;
  ec.crash.seed = c.seed;
  ec.judge.votes = c.votes;
  ec.judge.threshold = c.threshold;
  ec.judge.criterion = c.criterion;

  std::atomic<long> evaluated{0}, restored{0}, existing{0}, pending{0};
  parallel_for(present.size(), c.pool_size, [&](std::size_t i) {
    const RunKey& k = present[i];
    const std::string& agent = k.agent->overlay.name;
    if (auto stored = ctx.results.get(c.experiment, k.bug_id, agent, k.attempt)) {
      (ctx.store.insert_evaluation(*stored) ? restored : existing)++;
      return;
    }
    const auto artifact = ctx.store.run(c.experiment, k.bug_id, agent, k.attempt);
    const corpus::BugRecord& bug = by_id.at(k.bug_id);
    patch::DirectoryTree tree(c.trees / bug.kernel_commit);
    const auto rec =
        eval::evaluate_attempt(*artifact, bug, ctx.backend, judge, tree, ec);
    if (rec.pending) {
      ++pending;
      ctx.log("evaluate " + k.bug_id + " " + agent + " #" +
              std::to_string(k.attempt) + ": pending");
      return;
    }
    ctx.results.put(rec);
    ctx.store.insert_evaluation(rec);
    ++evaluated;
    ctx.log("evaluate " + k.bug_id + " " + agent + " #" +
            std::to_string(k.attempt) + ": " +
            (rec.crash_resolved ? "resolved" : "unresolved") + ", " +
            eval::to_string(rec.equivalence));
  });
  StageSummary s{Stage::kEvaluate};
  s.counts = {{"runs", present.size()},
              {"evaluated", evaluated.load()},
              {"restored", restored.load()},
              {"already_evaluated", existing.load()},
              {"pending", pending.load()}};
  s.up_to_date = evaluated == 0 && restored == 0 && pending == 0;
  return s;
}

StageSummary stage_report(Context& ctx) {
  const auto& c = ctx.config;
  const auto snap = ctx.store.snapshot();
  dashboard::FilterSpec f;
  f.experiment.insert(c.experiment);
  const auto records = dashboard::filter_records(snap, f);
  if (records.empty()) {
    throw StageFailed("report", "missing artifacts: no evaluations recorded");
  }
  json report;
  report["experiment"] = c.experiment;
  report["overall"] = metrics::summarize(records, f.to_json());
  json rows = json::array();
  for (const auto& row : dashboard::leaderboard(snap, "config", f)) {
    rows.push_back(dashboard::to_json(row));
  }
  report["leaderboard"] = rows;
  std::string text = "Experiment " + c.experiment + "\n\n" +
                     metrics::render_report(metrics::summarize(records));
  if (c.cutoff_date) {
    try {
      const auto cut = metrics::cutoff_report(records, snap.bugs, *c.cutoff_date);
      report["cutoff"] = cut;
      text += "\n" + metrics::render_cutoff_table(cut);
    } catch (const metrics::EmptySide& e) {
      report["cutoff"] = {{"error", e.code()}, {"message", e.what()}};
      text += "\ncutoff: " + std::string(e.what()) + "\n";
    }
  }
  const fs::path dir = c.results / c.experiment;
  const std::string body = report.dump(2) + "\n";
  const bool same = read_file(dir / "report.json") == body;
  if (!same) {
    write_file_atomic(dir / "report.json", body);
    write_file_atomic(dir / "report.txt", text);
  }
  StageSummary s{Stage::kReport};
  s.up_to_date = same;
  s.counts = {{"evaluations", records.size()}, {"leaderboard_rows", rows.size()}};
  return s;
}

}  // namespace

std::string to_string(Stage s) {
  switch (s) {
    case Stage::kIngest:
      return "ingest";
    case Stage::kCurate:
      return "curate";
    case Stage::kRun:
      return "run";
    case Stage::kEvaluate:
      return "evaluate";
    case Stage::kReport:
      return "report";
  }
  return "report";
}

Stage stage_from_string(const std::string& s) {
  for (Stage st : all_stages()) {
    if (to_string(st) == s) return st;
  }
  throw ConfigError("unknown stage '" + s + "'");
}

std::vector<Stage> all_stages() {
  return {Stage::kIngest, Stage::kCurate, Stage::kRun, Stage::kEvaluate,
          Stage::kReport};
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  auto body = read_file(path);
  if (!body) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(*body);
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return from_json(j, fs::absolute(path).parent_path());
}

ExperimentConfig ExperimentConfig::from_json(const json& j,
                                             const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  c.base_dir = base_dir;
  c.experiment = get_or<std::string>(j, "experiment", "");
  c.corpus = resolve(base_dir, get_or<std::string>(j, "corpus", "corpus"));
  if (j.contains("reports")) {
    const auto& r = j.at("reports");
    if (r.is_string()) {
      c.reports_dir = resolve(base_dir, r.get<std::string>());
    } else {
      c.reports_dir = resolve(base_dir, get_or<std::string>(r, "directory", ""));
      c.reports_feed = get_or<std::string>(r, "feed", "");
    }
  }
  c.trees = resolve(base_dir, get_or<std::string>(j, "trees", "trees"));
  c.store = resolve(base_dir, get_or<std::string>(j, "store", "crashbench.db"));
  c.results = resolve(base_dir, get_or<std::string>(j, "results", "results"));
  c.sandbox = resolve(base_dir, get_or<std::string>(j, "sandbox", ""));
  if (c.sandbox.empty()) c.sandbox = c.results / ".sandbox";
  c.run_kernel = resolve(base_dir, get_or<std::string>(j, "run_kernel", ""));

  if (j.contains("backend")) {
    const auto& b = j.at("backend");
    c.backend.kind = get_or<std::string>(b, "kind", "sim");
    c.backend.scenarios =
        resolve(base_dir, get_or<std::string>(b, "scenarios", ""));
    c.backend.endpoint = get_or<std::string>(b, "endpoint", "");
  }
  c.seed = get_or<std::uint64_t>(j, "seed", 0);
  c.attempts = get_or<int>(j, "attempts", 1);
  c.curation_attempts = get_or<int>(j, "curation_attempts", 5);

  for (const auto& a : get_or<json>(j, "agents", json::array())) {
    AgentSpec spec;
    spec.manifest = resolve(base_dir, get_or<std::string>(a, "manifest", ""));
    if (spec.manifest.empty()) throw ConfigError("agent without manifest");
    if (!fs::exists(spec.manifest)) {
      throw ConfigError("agent manifest not found: " + spec.manifest.string());
    }
    try {
      spec.overlay = env::load_overlay(spec.manifest);
    } catch (const Error& e) {
      throw ConfigError("manifest " + spec.manifest.string() + ": " + e.what());
    }
    spec.scaffold = get_or<std::string>(a, "scaffold", spec.overlay.name);
    spec.model = get_or<std::string>(a, "model", "");
    spec.crf_enabled = get_or<bool>(a, "crf_enabled", true);
    spec.oracle_mode = get_or<bool>(a, "oracle_mode", false);
    spec.budget_usd = optional_number(a, "budget_usd", std::nullopt);
    c.agents.push_back(std::move(spec));
  }

  const json limits = get_or<json>(j, "limits", json::object());
  c.limits.budget_usd = optional_number(limits, "budget_usd", std::nullopt);
  if (auto steps = optional_number(limits, "step_limit", std::nullopt)) {
    c.limits.step_limit = long(*steps);
  }
  c.limits.time_limit_seconds =
      optional_number(limits, "time_limit_seconds", 7200.0);

  const json ev = get_or<json>(j, "evaluation", json::object());
  c.runs = get_or<int>(ev, "runs", 25);
  c.votes = get_or<int>(ev, "votes", 9);
  c.threshold = get_or<int>(ev, "threshold", 5);
  c.crf_trials = get_or<int>(ev, "crf_trials", 10);
  if (auto cf = get_or<std::string>(ev, "criterion_file", ""); !cf.empty()) {
    auto text = read_file(resolve(base_dir, cf));
    if (!text) throw ConfigError("cannot read criterion_file " + cf);
    c.criterion = *text;
  }

  const json judge = get_or<json>(j, "judge", json::object());
  c.judge.kind = get_or<std::string>(judge, "kind", "rule");
  c.judge.script = get_or<std::string>(judge, "script", "");
  c.judge.command = get_or<std::string>(judge, "command", "");

  if (auto cut = get_or<std::string>(j, "cutoff_date", ""); !cut.empty()) {
    try {
      c.cutoff_date = Date::parse(cut);
    } catch (const Error& e) {
      throw ConfigError("cutoff_date: " + std::string(e.what()));
    }
  }
  if (j.contains("pricing") && !j.at("pricing").is_null()) {
    c.pricing = get_or<exec::Pricing>(j, "pricing", {});
  }
  c.pool_size = get_or<int>(j, "pool_size", 4);
  const json sched = get_or<json>(j, "schedule", json::object());
  c.schedule.interval_seconds =
      get_or<double>(sched, "interval_seconds", c.schedule.interval_seconds);
  c.schedule.jitter_fraction =
      get_or<double>(sched, "jitter_fraction", c.schedule.jitter_fraction);
  return c;
}

void ExperimentConfig::validate() const {
  if (!corpus::valid_bug_id(experiment)) {
    throw ConfigError("experiment name must match [A-Za-z0-9._-]+");
  }
  if (reports_feed.empty() && !fs::is_directory(reports_dir)) {
    throw ConfigError("reports directory not found: " + reports_dir.string());
  }
  if (!fs::is_directory(trees)) {
    throw ConfigError("trees directory not found: " + trees.string());
  }
  if (backend.kind == "sim") {
    if (!fs::is_directory(backend.scenarios)) {
      throw ConfigError("scenario directory not found: " +
                        backend.scenarios.string());
    }
  } else if (backend.kind == "remote") {
    if (backend.endpoint.empty()) throw ConfigError("remote backend needs an endpoint");
  } else {
    throw ConfigError("backend.kind must be sim or remote");
  }
  if (!run_kernel.empty() && !fs::exists(run_kernel)) {
    throw ConfigError("run_kernel not found: " + run_kernel.string());
  }
  if (attempts < 1) throw ConfigError("attempts must be at least 1");
  if (curation_attempts < 1) throw ConfigError("curation_attempts must be >= 1");
  if (runs < 1) throw ConfigError("evaluation.runs must be at least 1");
  if (crf_trials < 1) throw ConfigError("evaluation.crf_trials must be >= 1");
  if (pool_size < 1) throw ConfigError("pool_size must be at least 1");
  try {
    eval::JudgeConfig jc;
    jc.votes = votes;
    jc.threshold = threshold;
    eval::validate(jc);
  } catch (const Error& e) {
    throw ConfigError(std::string("evaluation: ") + e.what());
  }
  if (judge.kind != "rule" && judge.kind != "scripted" &&
      judge.kind != "command") {
    throw ConfigError("judge.kind must be rule, scripted or command");
  }
  std::set<std::string> names;
  for (const auto& a : agents) {
    if (!names.insert(a.overlay.name).second) {
      throw ConfigError("duplicate agent name " + a.overlay.name);
    }
  }
  if (limits.time_limit_seconds && *limits.time_limit_seconds <= 0) {
    throw ConfigError("limits.time_limit_seconds must be positive");
  }
  if (schedule.interval_seconds <= 0 || schedule.jitter_fraction < 0 ||
      schedule.jitter_fraction >= 1) {
    throw ConfigError("schedule needs interval > 0 and jitter in [0, 1)");
  }
}

json ExperimentConfig::canonical() const {
  json agents_json = json::array();
  for (const auto& a : agents) {
    agents_json.push_back({{"overlay", a.overlay.to_json()},
                           {"scaffold", a.scaffold},
                           {"model", a.model},
                           {"crf_enabled", a.crf_enabled},
                           {"oracle_mode", a.oracle_mode},
                           {"budget_usd", optional_json(a.budget_usd)}});
  }
  return {{"experiment", experiment},
          {"backend",
           {{"kind", backend.kind},
            {"scenarios", relative_to(backend.scenarios, base_dir)},
            {"endpoint", backend.endpoint}}},
          {"seed", seed},
          {"attempts", attempts},
          {"curation_attempts", curation_attempts},
          {"agents", agents_json},
          {"limits",
           {{"budget_usd", optional_json(limits.budget_usd)},
            {"step_limit", limits.step_limit ? json(*limits.step_limit)
                                             : json(nullptr)},
            {"time_limit_seconds", optional_json(limits.time_limit_seconds)}}},
          {"evaluation",
           {{"runs", runs},
            {"votes", votes},
            {"threshold", threshold},
            {"crf_trials", crf_trials},
            {"criterion", criterion}}},
          {"judge",
           {{"kind", judge.kind},
            {"script", judge.script},
            {"command", judge.command}}},
          {"cutoff_date", cutoff_date ? json(cutoff_date->iso()) : json(nullptr)},
          {"pricing", pricing ? json(*pricing) : json(nullptr)}};
}

std::string ExperimentConfig::digest() const {
  return sha256_hex(canonical().dump());
}

json PipelineSummary::to_json() const {
  json stages_json = json::array();
  for (const auto& s : stages) {
    stages_json.push_back({{"stage", pipeline::to_string(s.stage)},
                           {"status", s.up_to_date ? "up to date" : "ok"},
                           {"counts", s.counts}});
  }
  return {{"experiment", experiment}, {"stages", stages_json}};
}

std::string PipelineSummary::render() const {
  std::ostringstream out;
  out << "experiment " << experiment << "\n";
  for (const auto& s : stages) {
    out << "  " << pipeline::to_string(s.stage) << ": "
        << (s.up_to_date ? "up to date" : "ok");
    json counts = s.counts;
    counts.erase("errors");
    out << " " << counts.dump() << "\n";
  }
  return out.str();
}

std::unique_ptr<exec::ExecutionBackend> make_backend(
    const ExperimentConfig& config) {
  if (config.backend.kind == "remote") {
    return std::make_unique<exec::RemoteBackend>(config.backend.endpoint);
  }
  auto sim = std::make_unique<exec::Simulator>(
      exec::directory_tree_resolver(config.trees));
  for (auto& s : exec::load_scenarios(config.backend.scenarios)) {
    sim->add_scenario(std::move(s));
  }
  return sim;
}

std::unique_ptr<eval::JudgeClient> make_judge(const ExperimentConfig& config) {
  if (config.judge.kind == "scripted") {
    return std::make_unique<eval::ScriptedJudge>(config.judge.script);
  }
  if (config.judge.kind == "command") {
    return std::make_unique<eval::CommandJudge>(config.judge.command);
  }
  return std::make_unique<eval::RuleJudge>();
}

PipelineSummary run_pipeline(const ExperimentConfig& config,
                             const PipelineOptions& options) {
  config.validate();
  ExperimentLock lock(config.results / ("." + config.experiment + ".lock"));
  dashboard::Store store(config.store);

  const std::string digest = config.digest();
  const auto prior = store.experiment_digest(config.experiment);
  if (prior && *prior != digest) {
    if (!options.force) {
      throw ConfigError("configuration of experiment '" + config.experiment +
                        "' changed since it was started; pass --force to "
                        "discard its runs and evaluations");
    }
    store.reset_experiment(config.experiment);
    std::error_code ec;
    fs::remove_all(config.results / config.experiment, ec);
  }
  if (!prior || *prior != digest) {
    store.put_experiment(config.experiment, digest, config.canonical());
  }

  std::unique_ptr<exec::ExecutionBackend> owned;
  exec::ExecutionBackend* backend = options.backend;
  if (!backend) {
    owned = make_backend(config);
    backend = owned.get();
  }
  const auto judge = make_judge(config);

  Context ctx{config,  options, corpus::CorpusStore(config.corpus), store,
              *backend, eval::ResultStore(config.results), {}};
  PipelineSummary summary;
  summary.experiment = config.experiment;
  for (Stage st : all_stages()) {
    if (std::find(options.stages.begin(), options.stages.end(), st) ==
        options.stages.end()) {
      continue;
    }
    const std::string name = to_string(st);
    ctx.log("stage " + name);
    StageSummary s;
    try {
      switch (st) {
        case Stage::kIngest:
          s = stage_ingest(ctx);
          break;
        case Stage::kCurate:
          s = stage_curate(ctx);
          break;
        case Stage::kRun:
          s = stage_run(ctx);
          break;
        case Stage::kEvaluate:
          s = stage_evaluate(ctx, *judge);
          break;
        case Stage::kReport:
          s = stage_report(ctx);
          break;
      }
    } catch (const StageFailed& e) {
      store.set_stage({config.experiment, name, "failed", digest,
                       {{"error", e.what()}}, ""});
      throw;
    } catch (const std::exception& e) {
      store.set_stage({config.experiment, name, "failed", digest,
                       {{"error", e.what()}}, ""});
      throw StageFailed(name, e.what());
    }
    store.set_stage({config.experiment, name, "done", digest, s.counts, ""});
    summary.stages.push_back(std::move(s));
  }
  return summary;
}

void run_scheduled(const ExperimentConfig& config,
                   const PipelineOptions& options, int cycles,
                   const std::function<void(std::chrono::duration<double>)>& sleep) {
  std::mt19937_64 rng(config.seed ^ 0x5eedULL);
  std::uniform_real_distribution<double> jitter(-config.schedule.jitter_fraction,
                                                config.schedule.jitter_fraction);
  for (int i = 0; cycles <= 0 || i < cycles; ++i) {
    const auto summary = run_pipeline(config, options);
    if (options.log) *options.log << summary.render();
    if (cycles > 0 && i + 1 >= cycles) break;
    const std::chrono::duration<double> wait(config.schedule.interval_seconds *
                                             (1.0 + jitter(rng)));
    if (sleep) {
      sleep(wait);
    } else {
      std::this_thread::sleep_for(wait);
    }
  }
}

}  // namespace crashbench::pipeline
