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

#ifndef CRASHBENCH_DASHBOARD_HPP_
#define CRASHBENCH_DASHBOARD_HPP_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "crashbench/date.hpp"
#include "crashbench/error.hpp"
#include "crashbench/http.hpp"
#include "crashbench/metrics.hpp"
#include "crashbench/store.hpp"
#include "json.hpp"

namespace crashbench::dashboard {

class InvalidFilter : public Error {
 public:
  InvalidFilter(std::string key, const std::string& why)
      : Error("InvalidFilter", "filter '" + key + "': " + why),
        key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class InvalidGroupKey : public Error {
 public:
  explicit InvalidGroupKey(const std::string& key)
      : Error("InvalidGroupKey", "cannot group by '" + key + "'") {}
};

inline constexpr long kMaxPageSize = 500;

// Conjunctive filter. Bug-level keys narrow bugs; agent- and record-level
// keys narrow evaluation records. Date bounds follow the cutoff convention:
// fixed_before is inclusive, fixed_after exclusive.
struct FilterSpec {
  std::optional<Date> fixed_after;
  std::optional<Date> fixed_before;
  std::set<std::string> subsystem;
  std::set<std::string> bug_type;
  std::set<std::string> scaffold;
  std::set<std::string> model;
  std::optional<bool> crf_enabled;
  std::optional<bool> oracle_mode;
  std::optional<double> cost_limit;
  std::optional<bool> crash_resolved;
  std::set<std::string> equivalence;
  std::optional<double> iou_min;  // bounds on function-level IoU
  std::optional<double> iou_max;
  std::optional<long> attempts;  // keep attempts 1..N per (bug, agent)
  std::set<std::string> experiment;
  std::set<std::string> bug_id;
  std::set<std::string> agent;

  bool has_record_filters() const;
  nlohmann::json to_json() const;
};

using Params = std::multimap<std::string, std::string>;

// Parses query parameters. Keys in `extra` (e.g. page, group_by) are skipped;
// any other unknown key throws InvalidFilter.
FilterSpec parse_filter(const Params& params,
                        const std::set<std::string>& extra = {});

bool bug_matches(const FilterSpec& f, const corpus::BugRecord& bug);
bool record_matches(const FilterSpec& f, const eval::EvaluationRecord& r,
                    const AgentInfo* agent);

// Records passing both the bug-level and record-level filters.
std::vector<eval::EvaluationRecord> filter_records(const Snapshot& snap,
                                                   const FilterSpec& f);

struct PageRequest {
  long page = 1;
  long page_size = 50;
};

PageRequest parse_page(const Params& params);

struct BugPage {
  long total = 0;
  long page = 1;
  long page_size = 0;
  nlohmann::json items = nlohmann::json::array();
};

// Ordered by fixed_date desc (open bugs last), then bug_id asc.
BugPage query_bugs(const Snapshot& snap, const FilterSpec& f,
                   const PageRequest& page);

struct LeaderboardRow {
  nlohmann::json group;
  metrics::MetricsReport report;
};

// group_by: scaffold, model, scaffold_model or config.
std::vector<LeaderboardRow> leaderboard(const Snapshot& snap,
                                        const std::string& group_by,
                                        const FilterSpec& f);

nlohmann::json to_json(const LeaderboardRow& row);

// Bugs with at least one in-scope record and no resolved record.
std::vector<std::string> toughest_bugs(const Snapshot& snap,
                                       const FilterSpec& f);

// GET /api/{bugs,runs,leaderboard,toughest,metrics,health}.
class DashboardServer {
 public:
  explicit DashboardServer(const Store& store);
  int start(const std::string& host = "127.0.0.1", int port = 0);
  void run(const std::string& host, int port) { service_.run(host, port); }
  void stop() { service_.stop(); }
  std::string base_url() const { return service_.base_url(); }

 private:
  const Store& store_;
  http::Service service_;
};

}  // namespace crashbench::dashboard

#endif  // CRASHBENCH_DASHBOARD_HPP_
