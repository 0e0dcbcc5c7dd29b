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

#include "crashbench/store.hpp"

#include <sqlite3.h>

#include <chrono>
#include <ctime>

#include "crashbench/error.hpp"

namespace crashbench::dashboard {
namespace {

using nlohmann::json;

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS experiments (
  name          TEXT PRIMARY KEY,
  config_digest TEXT NOT NULL,
  config_json   TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS bugs (
  bug_id            TEXT PRIMARY KEY,
  subsystem         TEXT NOT NULL,
  bug_type          TEXT NOT NULL,
  reported_date     TEXT NOT NULL,
  fixed_date        TEXT,
  reproduction_rate REAL,
  record_json       TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS curation (
  bug_id   TEXT PRIMARY KEY,
  admitted INTEGER NOT NULL,
  attempts INTEGER NOT NULL,
  observed INTEGER NOT NULL,
  reason   TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS agents (
  experiment  TEXT NOT NULL,
  agent_name  TEXT NOT NULL,
  scaffold    TEXT NOT NULL,
  model       TEXT NOT NULL,
  crf_enabled INTEGER NOT NULL,
  oracle_mode INTEGER NOT NULL,
  cost_limit  REAL,
  PRIMARY KEY (experiment, agent_name)
);
CREATE TABLE IF NOT EXISTS runs (
  experiment    TEXT NOT NULL,
  bug_id        TEXT NOT NULL,
  agent_name    TEXT NOT NULL,
  attempt_index INTEGER NOT NULL,
  exit_status   TEXT NOT NULL,
  dollar_cost   REAL NOT NULL,
  wall_time     REAL NOT NULL,
  artifact_json TEXT NOT NULL,
  PRIMARY KEY (experiment, bug_id, agent_name, attempt_index)
);
CREATE TABLE IF NOT EXISTS evaluations (
  experiment     TEXT NOT NULL,
  bug_id         TEXT NOT NULL,
  agent_name     TEXT NOT NULL,
  attempt_index  INTEGER NOT NULL,
  crash_resolved INTEGER NOT NULL,
  equivalence    TEXT NOT NULL,
  record_json    TEXT NOT NULL,
  PRIMARY KEY (experiment, bug_id, agent_name, attempt_index)
);
CREATE TABLE IF NOT EXISTS stages (
  experiment  TEXT NOT NULL,
  stage       TEXT NOT NULL,
  status      TEXT NOT NULL,
  digest      TEXT NOT NULL,
  counts_json TEXT NOT NULL,
  updated_at  TEXT NOT NULL,
  PRIMARY KEY (experiment, stage)
);
)sql";

class Stmt {
 public:
  Stmt(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &st_, nullptr) != SQLITE_OK) {
      throw Error("StoreError", sqlite3_errmsg(db));
    }
  }
  ~Stmt() { sqlite3_finalize(st_); }
  Stmt(const Stmt&) = delete;
  Stmt& operator=(const Stmt&) = delete;

  Stmt& bind(int i, const std::string& v) {
    sqlite3_bind_text(st_, i, v.c_str(), int(v.size()), SQLITE_TRANSIENT);
    return *this;
  }
  Stmt& bind(int i, long v) {
    sqlite3_bind_int64(st_, i, v);
    return *this;
  }
  Stmt& bind(int i, int v) { return bind(i, long(v)); }
  Stmt& bind(int i, bool v) { return bind(i, long(v ? 1 : 0)); }
  Stmt& bind(int i, double v) {
    sqlite3_bind_double(st_, i, v);
    return *this;
  }
  Stmt& bind(int i, const std::optional<double>& v) {
    if (v) return bind(i, *v);
    sqlite3_bind_null(st_, i);
    return *this;
  }
  Stmt& bind_null(int i) {
    sqlite3_bind_null(st_, i);
    return *this;
  }

  // True while a row is available.
  bool step() {
    const int rc = sqlite3_step(st_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    throw Error("StoreError", sqlite3_errmsg(db_));
  }

  std::string text(int col) const {
    const auto* p = sqlite3_column_text(st_, col);
    return p ? reinterpret_cast<const char*>(p) : "";
  }
  long integer(int col) const { return long(sqlite3_column_int64(st_, col)); }
  double real(int col) const { return sqlite3_column_double(st_, col); }
  bool is_null(int col) const {
    return sqlite3_column_type(st_, col) == SQLITE_NULL;
  }

 private:
  sqlite3* db_;
  sqlite3_stmt* st_ = nullptr;
};

std::string now_iso() {
  const std::time_t t = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

const AgentInfo* Snapshot::agent(const std::string& experiment,
                                 const std::string& name) const {
  for (const auto& a : agents) {
    if (a.experiment == experiment && a.agent_name == name) return &a;
  }
  return nullptr;
}

const corpus::BugRecord* Snapshot::bug(const std::string& bug_id) const {
  for (const auto& b : bugs) {
    if (b.bug_id == bug_id) return &b;
  }
  return nullptr;
}

Store::Store(const std::filesystem::path& db_path) {
  if (db_path.has_parent_path()) {
    std::filesystem::create_directories(db_path.parent_path());
  }
  if (sqlite3_open(db_path.c_str(), &db_) != SQLITE_OK) {
    const std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    throw Error("StoreError", "cannot open " + db_path.string() + ": " + msg);
  }
  sqlite3_busy_timeout(db_, 5000);
  exec("PRAGMA journal_mode=WAL;");
  exec(kSchema);
}

Store::~Store() { sqlite3_close(db_); }

void Store::exec(const char* sql) const {
  char* err = nullptr;
  if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    const std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw Error("StoreError", msg);
  }
}

void Store::upsert_bug(const corpus::BugRecord& bug) {
  std::lock_guard<std::mutex> lock(mu_);
  Stmt st(db_, R"sql(
    INSERT INTO bugs VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)
    ON CONFLICT(bug_id) DO UPDATE SET
      subsystem = excluded.subsystem, bug_type = excluded.bug_type,
      reported_date = excluded.reported_date, fixed_date = excluded.fixed_date,
      reproduction_rate = excluded.reproduction_rate,
      record_json = excluded.record_json)sql");
  st.bind(1, bug.bug_id).bind(2, bug.subsystem).bind(3, bug.bug_type);
  st.bind(4, bug.reported_date.iso());
  if (bug.fix) {
    st.bind(5, bug.fix->fixed_date.iso());
  } else {
    st.bind_null(5);
  }
  st.bind(6, bug.reproduction_rate).bind(7, json(bug).dump());
  st.step();
}

void Store::put_curation(const corpus::CurationResult& r) {
  std::lock_guard<std::mutex> lock(mu_);
  Stmt st(db_, "INSERT OR REPLACE INTO curation VALUES (?1, ?2, ?3, ?4, ?5)");
  st.bind(1, r.bug_id).bind(2, r.admitted).bind(3, r.attempts);
  st.bind(4, r.observed).bind(5, r.reason);
  st.step();
}

void Store::upsert_agent(const AgentInfo& a) {
  std::lock_guard<std::mutex> lock(mu_);
  Stmt st(db_,
          "INSERT OR REPLACE INTO agents VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)");
  st.bind(1, a.experiment).bind(2, a.agent_name).bind(3, a.scaffold);
  st.bind(4, a.model).bind(5, a.crf_enabled).bind(6, a.oracle_mode);
  st.bind(7, a.cost_limit);
  st.step();
}

bool Store::insert_run(const std::string& experiment,
                       const env::AgentRunArtifact& a) {
  std::lock_guard<std::mutex> lock(mu_);
  Stmt st(db_,
          "INSERT OR IGNORE INTO runs VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8)");
  st.bind(1, experiment).bind(2, a.bug_id).bind(3, a.agent_name);
  st.bind(4, a.attempt_index).bind(5, env::to_string(a.exit_status));
  st.bind(6, a.dollar_cost).bind(7, a.wall_time_seconds);
  st.bind(8, json(a).dump());
  st.step();
  return sqlite3_changes(db_) > 0;
}

bool Store::insert_evaluation(const eval::EvaluationRecord& r) {
  std::lock_guard<std::mutex> lock(mu_);
  Stmt st(db_,
          "INSERT OR IGNORE INTO evaluations VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)");
  st.bind(1, r.experiment).bind(2, r.bug_id).bind(3, r.agent_name);
  st.bind(4, r.attempt_index).bind(5, r.crash_resolved);
  st.bind(6, eval::to_string(r.equivalence)).bind(7, json(r).dump());
  st.step();
  return sqlite3_changes(db_) > 0;
}

std::optional<env::AgentRunArtifact> Store::run(const std::string& experiment,
                                                const std::string& bug_id,
                                                const std::string& agent,
                                                int attempt) const {
  std::lock_guard<std::mutex> lock(mu_);
  Stmt st(db_, R"sql(SELECT artifact_json FROM runs WHERE experiment = ?1
                     AND bug_id = ?2 AND agent_name = ?3
                     AND attempt_index = ?4)sql");
  st.bind(1, experiment).bind(2, bug_id).bind(3, agent).bind(4, attempt);
  if (!st.step()) return std::nullopt;
  return json::parse(st.text(0)).get<env::AgentRunArtifact>();
}

bool Store::has_run(const std::string& experiment, const std::string& bug_id,
                    const std::string& agent, int attempt) const {
  std::lock_guard<std::mutex> lock(mu_);
  Stmt st(db_, R"sql(SELECT 1 FROM runs WHERE experiment = ?1 AND bug_id = ?2
                     AND agent_name = ?3 AND attempt_index = ?4)sql");
  st.bind(1, experiment).bind(2, bug_id).bind(3, agent).bind(4, attempt);
  return st.step();
}

long Store::count_runs(const std::string& experiment) const {
  std::lock_guard<std::mutex> lock(mu_);
  Stmt st(db_, "SELECT COUNT(*) FROM runs WHERE experiment = ?1");
  st.bind(1, experiment);
  st.step();
  return st.integer(0);
}

long Store::count_evaluations(const std::string& experiment) const {
  std::lock_guard<std::mutex> lock(mu_);
  Stmt st(db_, "SELECT COUNT(*) FROM evaluations WHERE experiment = ?1");
  st.bind(1, experiment);
  st.step();
  return st.integer(0);
}

std::optional<std::string> Store::experiment_digest(
    const std::string& name) const {
  std::lock_guard<std::mutex> lock(mu_);
  Stmt st(db_, "SELECT config_digest FROM experiments WHERE name = ?1");
  st.bind(1, name);
  if (!st.step()) return std::nullopt;
  return st.text(0);
}

void Store::put_experiment(const std::string& name, const std::string& digest,
                           const json& config) {
  std::lock_guard<std::mutex> lock(mu_);
  Stmt st(db_, "INSERT OR REPLACE INTO experiments VALUES (?1, ?2, ?3)");
  st.bind(1, name).bind(2, digest).bind(3, config.dump());
  st.step();
}

void Store::reset_experiment(const std::string& name) {
  std::lock_guard<std::mutex> lock(mu_);
  exec("BEGIN IMMEDIATE;");
  try {
    for (const char* table : {"runs", "evaluations", "stages", "agents"}) {
      const std::string sql =
          std::string("DELETE FROM ") + table + " WHERE experiment = ?1";
      Stmt st(db_, sql.c_str());
      st.bind(1, name);
      st.step();
    }
    exec("COMMIT;");
  } catch (...) {
    exec("ROLLBACK;");
    throw;
  }
}

void Store::set_stage(const StageState& s) {
  std::lock_guard<std::mutex> lock(mu_);
  Stmt st(db_, "INSERT OR REPLACE INTO stages VALUES (?1, ?2, ?3, ?4, ?5, ?6)");
  st.bind(1, s.experiment).bind(2, s.stage).bind(3, s.status);
  st.bind(4, s.digest).bind(5, s.counts.dump());
  st.bind(6, s.updated_at.empty() ? now_iso() : s.updated_at);
  st.step();
}

std::optional<StageState> Store::stage(const std::string& experiment,
                                       const std::string& stage) const {
  std::lock_guard<std::mutex> lock(mu_);
  Stmt st(db_, R"sql(SELECT status, digest, counts_json, updated_at FROM stages
                     WHERE experiment = ?1 AND stage = ?2)sql");
  st.bind(1, experiment).bind(2, stage);
  if (!st.step()) return std::nullopt;
  StageState s;
  s.experiment = experiment;
  s.stage = stage;
  s.status = st.text(0);
  s.digest = st.text(1);
  s.counts = json::parse(st.text(2));
  s.updated_at = st.text(3);
  return s;
}

Snapshot Store::snapshot() const {
  std::lock_guard<std::mutex> lock(mu_);
  Snapshot snap;
  exec("BEGIN;");
  try {
    {
      Stmt st(db_, "SELECT record_json FROM bugs ORDER BY bug_id");
      while (st.step()) {
        snap.bugs.push_back(json::parse(st.text(0)).get<corpus::BugRecord>());
      }
    }
    {
      Stmt st(db_, "SELECT bug_id, admitted, attempts, observed, reason "
                   "FROM curation");
      while (st.step()) {
        corpus::CurationResult c;
        c.bug_id = st.text(0);
        c.admitted = st.integer(1) != 0;
        c.attempts = int(st.integer(2));
        c.observed = int(st.integer(3));
        c.reason = st.text(4);
        snap.curation[c.bug_id] = c;
      }
    }
    {
      Stmt st(db_, "SELECT * FROM agents ORDER BY experiment, agent_name");
      while (st.step()) {
        AgentInfo a;
        a.experiment = st.text(0);
        a.agent_name = st.text(1);
        a.scaffold = st.text(2);
        a.model = st.text(3);
        a.crf_enabled = st.integer(4) != 0;
        a.oracle_mode = st.integer(5) != 0;
        if (!st.is_null(6)) a.cost_limit = st.real(6);
        snap.agents.push_back(std::move(a));
      }
    }
    {
      Stmt st(db_, R"sql(SELECT record_json FROM evaluations ORDER BY
                         experiment, bug_id, agent_name, attempt_index)sql");
      while (st.step()) {
        snap.evaluations.push_back(
            json::parse(st.text(0)).get<eval::EvaluationRecord>());
      }
    }
    exec("COMMIT;");
  } catch (...) {
    exec("ROLLBACK;");
    throw;
  }
  return snap;
}

}  // namespace crashbench::dashboard
