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

#include "crashbench/dashboard.hpp"

#include <algorithm>
#include <cmath>

namespace crashbench::dashboard {
namespace {

using nlohmann::json;

const std::set<std::string> kFilterKeys = {
    "fixed_after", "fixed_before", "subsystem",      "bug_type",
    "scaffold",    "model",        "crf_enabled",    "oracle_mode",
    "cost_limit",  "crash_resolved", "equivalence",  "iou_min",
    "iou_max",     "attempts",     "experiment",     "bug_id",
    "agent"};

const std::set<std::string> kEquivalenceValues = {
    "equivalent", "discrepant", "not_applicable", "withheld"};

std::vector<std::string> split_commas(const std::string& v) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    std::size_t comma = v.find(',', start);
    if (comma == std::string::npos) comma = v.size();
    if (comma > start) out.push_back(v.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InvalidFilter(key, "expected true or false");
}

double parse_number(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    throw InvalidFilter(key, "expected a number");
  }
  if (used != v.size() || !std::isfinite(d)) {
    throw InvalidFilter(key, "expected a number");
  }
  return d;
}

long parse_integer(const std::string& key, const std::string& v) {
  const double d = parse_number(key, v);
  if (d != std::floor(d)) throw InvalidFilter(key, "expected an integer");
  return long(d);
}

Date parse_date(const std::string& key, const std::string& v) {
  try {
    return Date::parse(v);
  } catch (const Error&) {
    throw InvalidFilter(key, "expected YYYY-MM-DD");
  }
}

template <typename T>
void set_once(std::optional<T>& slot, const std::string& key, T value) {
  if (slot) throw InvalidFilter(key, "given more than once");
  slot = std::move(value);
}

json set_json(const std::set<std::string>& s) { return json(s); }

bool has_bug_filters(const FilterSpec& f) {
  return f.fixed_after || f.fixed_before || !f.subsystem.empty() ||
         !f.bug_type.empty();
}

json bug_summary(const corpus::BugRecord& b, long attempts, long resolved) {
  return {{"bug_id", b.bug_id},
          {"title", b.title},
          {"subsystem", b.subsystem},
          {"bug_type", b.bug_type},
          {"reported_date", b.reported_date.iso()},
          {"fixed_date", b.fix ? json(b.fix->fixed_date.iso()) : json(nullptr)},
          {"reproduction_rate", b.reproduction_rate ? json(*b.reproduction_rate)
                                                    : json(nullptr)},
          {"n_attempts", attempts},
          {"n_resolved", resolved}};
}

json agent_json(const AgentInfo* a) {
  if (!a) return nullptr;
  return {{"scaffold", a->scaffold},
          {"model", a->model},
          {"crf_enabled", a->crf_enabled},
          {"oracle_mode", a->oracle_mode},
          {"cost_limit", a->cost_limit ? json(*a->cost_limit) : json(nullptr)}};
}

http::Response ok(const json& j) {
  http::Response r;
  r.body = j.dump();
  return r;
}

template <typename Fn>
http::Response guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const InvalidFilter& e) {
    auto r = http::error_response(400, e.code(), e.what());
    auto body = json::parse(r.body);
    body["key"] = e.key();
    r.body = body.dump();
    return r;
  } catch (const InvalidGroupKey& e) {
    return http::error_response(400, e.code(), e.what());
  } catch (const metrics::EmptySide& e) {
    return http::error_response(422, e.code(), e.what());
  }
}

}  // namespace

bool FilterSpec::has_record_filters() const {
  return !scaffold.empty() || !model.empty() || crf_enabled || oracle_mode ||
         cost_limit || crash_resolved || !equivalence.empty() || iou_min ||
         iou_max || attempts || !experiment.empty() || !agent.empty();
}

json FilterSpec::to_json() const {
  json j = json::object();
  if (fixed_after) j["fixed_after"] = fixed_after->iso();
  if (fixed_before) j["fixed_before"] = fixed_before->iso();
  if (!subsystem.empty()) j["subsystem"] = set_json(subsystem);
  if (!bug_type.empty()) j["bug_type"] = set_json(bug_type);
  if (!scaffold.empty()) j["scaffold"] = set_json(scaffold);
  if (!model.empty()) j["model"] = set_json(model);
  if (crf_enabled) j["crf_enabled"] = *crf_enabled;
  if (oracle_mode) j["oracle_mode"] = *oracle_mode;
  if (cost_limit) j["cost_limit"] = *cost_limit;
  if (crash_resolved) j["crash_resolved"] = *crash_resolved;
  if (!equivalence.empty()) j["equivalence"] = set_json(equivalence);
  if (iou_min) j["iou_min"] = *iou_min;
  if (iou_max) j["iou_max"] = *iou_max;
  if (attempts) j["attempts"] = *attempts;
  if (!experiment.empty()) j["experiment"] = set_json(experiment);
  if (!bug_id.empty()) j["bug_id"] = set_json(bug_id);
  if (!agent.empty()) j["agent"] = set_json(agent);
  return j;
}

FilterSpec parse_filter(const Params& params,
                        const std::set<std::string>& extra) {
  FilterSpec f;
  for (const auto& [key, value] : params) {
    if (extra.count(key)) continue;
    if (!kFilterKeys.count(key)) throw InvalidFilter(key, "unknown filter");
    if (key == "fixed_after") {
      set_once(f.fixed_after, key, parse_date(key, value));
    } else if (key == "fixed_before") {
      set_once(f.fixed_before, key, parse_date(key, value));
    } else if (key == "crf_enabled") {
      set_once(f.crf_enabled, key, parse_bool(key, value));
    } else if (key == "oracle_mode") {
      set_once(f.oracle_mode, key, parse_bool(key, value));
    } else if (key == "crash_resolved") {
      set_once(f.crash_resolved, key, parse_bool(key, value));
    } else if (key == "cost_limit") {
      set_once(f.cost_limit, key, parse_number(key, value));
    } else if (key == "iou_min") {
      set_once(f.iou_min, key, parse_number(key, value));
    } else if (key == "iou_max") {
      set_once(f.iou_max, key, parse_number(key, value));
    } else if (key == "attempts") {
      set_once(f.attempts, key, parse_integer(key, value));
    } else {
      std::set<std::string>* target = key == "subsystem"    ? &f.subsystem
                                      : key == "bug_type"   ? &f.bug_type
                                      : key == "scaffold"   ? &f.scaffold
                                      : key == "model"      ? &f.model
                                      : key == "equivalence" ? &f.equivalence
                                      : key == "experiment" ? &f.experiment
                                      : key == "bug_id"     ? &f.bug_id
                                                            : &f.agent;
      const auto parts = split_commas(value);
      if (parts.empty()) throw InvalidFilter(key, "empty value");
      target->insert(parts.begin(), parts.end());
    }
  }
  for (const auto& e : f.equivalence) {
    if (!kEquivalenceValues.count(e)) {
      throw InvalidFilter("equivalence", "unknown value '" + e + "'");
    }
  }
  if (f.fixed_after && f.fixed_before && *f.fixed_before < *f.fixed_after) {
    throw InvalidFilter("fixed_after", "later than fixed_before");
  }
  for (const auto* b : {&f.iou_min, &f.iou_max}) {
    if (*b && (**b < 0.0 || **b > 1.0)) {
      throw InvalidFilter(b == &f.iou_min ? "iou_min" : "iou_max",
                          "must lie in [0, 1]");
    }
  }
  if (f.iou_min && f.iou_max && *f.iou_max < *f.iou_min) {
    throw InvalidFilter("iou_min", "greater than iou_max");
  }
  if (f.attempts && *f.attempts < 1) {
    throw InvalidFilter("attempts", "must be at least 1");
  }
  if (f.cost_limit && *f.cost_limit < 0.0) {
    throw InvalidFilter("cost_limit", "must be non-negative");
  }
  return f;
}

PageRequest parse_page(const Params& params) {
  PageRequest p;
  if (auto it = params.find("page"); it != params.end()) {
    p.page = parse_integer("page", it->second);
    if (p.page < 1) throw InvalidFilter("page", "must be at least 1");
  }
  if (auto it = params.find("page_size"); it != params.end()) {
    p.page_size = parse_integer("page_size", it->second);
    if (p.page_size < 1) throw InvalidFilter("page_size", "must be at least 1");
  }
  p.page_size = std::min(p.page_size, kMaxPageSize);
  return p;
}

bool bug_matches(const FilterSpec& f, const corpus::BugRecord& b) {
  if (!f.bug_id.empty() && !f.bug_id.count(b.bug_id)) return false;
  if (!f.subsystem.empty() && !f.subsystem.count(b.subsystem)) return false;
  if (!f.bug_type.empty() && !f.bug_type.count(b.bug_type)) return false;
  if (f.fixed_after || f.fixed_before) {
    if (!b.fix) return false;
    const Date& d = b.fix->fixed_date;
    if (f.fixed_after && !(*f.fixed_after < d)) return false;
    if (f.fixed_before && *f.fixed_before < d) return false;
  }
  return true;
}

bool record_matches(const FilterSpec& f, const eval::EvaluationRecord& r,
                    const AgentInfo* a) {
  if (!f.experiment.empty() && !f.experiment.count(r.experiment)) return false;
  if (!f.bug_id.empty() && !f.bug_id.count(r.bug_id)) return false;
  if (!f.agent.empty() && !f.agent.count(r.agent_name)) return false;
  if (f.crash_resolved && r.crash_resolved != *f.crash_resolved) return false;
  if (!f.equivalence.empty() &&
      !f.equivalence.count(eval::to_string(r.equivalence))) {
    return false;
  }
  if (f.iou_min || f.iou_max) {
    if (!r.localization) return false;
    const double v = r.localization->function_iou;
    if (f.iou_min && v < *f.iou_min) return false;
    if (f.iou_max && v > *f.iou_max) return false;
  }
  if (f.attempts && r.attempt_index > *f.attempts) return false;
  const bool agent_filters = !f.scaffold.empty() || !f.model.empty() ||
                             f.crf_enabled || f.oracle_mode || f.cost_limit;
  if (!agent_filters) return true;
  if (!a) return false;
  if (!f.scaffold.empty() && !f.scaffold.count(a->scaffold)) return false;
  if (!f.model.empty() && !f.model.count(a->model)) return false;
  if (f.crf_enabled && a->crf_enabled != *f.crf_enabled) return false;
  if (f.oracle_mode && a->oracle_mode != *f.oracle_mode) return false;
  if (f.cost_limit && a->cost_limit != f.cost_limit) return false;
  return true;
}

std::vector<eval::EvaluationRecord> filter_records(const Snapshot& snap,
                                                   const FilterSpec& f) {
  std::map<std::string, bool> bug_ok;
  for (const auto& b : snap.bugs) bug_ok[b.bug_id] = bug_matches(f, b);
  const bool bug_filters = has_bug_filters(f);
  std::vector<eval::EvaluationRecord> out;
  for (const auto& r : snap.evaluations) {
    auto it = bug_ok.find(r.bug_id);
    if (it == bug_ok.end() ? bug_filters : !it->second) continue;
    if (!record_matches(f, r, snap.agent(r.experiment, r.agent_name))) continue;
    out.push_back(r);
  }
  return out;
}

BugPage query_bugs(const Snapshot& snap, const FilterSpec& f,
                   const PageRequest& page) {
  std::map<std::string, std::pair<long, long>> tallies;  // attempts, resolved
  for (const auto& r : filter_records(snap, f)) {
    auto& t = tallies[r.bug_id];
    ++t.first;
    if (r.crash_resolved) ++t.second;
  }
  std::vector<const corpus::BugRecord*> hits;
  for (const auto& b : snap.bugs) {
    if (!bug_matches(f, b)) continue;
    if (f.has_record_filters() && !tallies.count(b.bug_id)) continue;
    hits.push_back(&b);
  }
  std::sort(hits.begin(), hits.end(), [](const auto* a, const auto* b) {
    if (a->fix.has_value() != b->fix.has_value()) return a->fix.has_value();
    if (a->fix && a->fix->fixed_date != b->fix->fixed_date) {
      return b->fix->fixed_date < a->fix->fixed_date;
    }
    return a->bug_id < b->bug_id;
  });
  BugPage out;
  out.total = long(hits.size());
  out.page = page.page;
  out.page_size = page.page_size;
  const long begin = (page.page - 1) * page.page_size;
  for (long i = begin; i < out.total && i < begin + page.page_size; ++i) {
    const auto& t = tallies[hits[std::size_t(i)]->bug_id];
    out.items.push_back(bug_summary(*hits[std::size_t(i)], t.first, t.second));
  }
  return out;
}

std::vector<LeaderboardRow> leaderboard(const Snapshot& snap,
                                        const std::string& group_by,
                                        const FilterSpec& f) {
  if (group_by != "scaffold" && group_by != "model" &&
      group_by != "scaffold_model" && group_by != "config") {
    throw InvalidGroupKey(group_by);
  }
  std::map<std::string, std::pair<json, std::vector<eval::EvaluationRecord>>>
      groups;
  for (auto& r : filter_records(snap, f)) {
    const AgentInfo* a = snap.agent(r.experiment, r.agent_name);
    const std::string scaffold = a ? a->scaffold : "";
    const std::string model = a ? a->model : "";
    json key;
    if (group_by == "scaffold") {
      key = {{"scaffold", scaffold}};
    } else if (group_by == "model") {
      key = {{"model", model}};
    } else if (group_by == "scaffold_model") {
      key = {{"scaffold", scaffold}, {"model", model}};
    } else {
      key = agent_json(a);
      if (key.is_null()) key = json::object();
      key["experiment"] = r.experiment;
      key["agent_name"] = r.agent_name;
    }
    auto& g = groups[key.dump()];
    g.first = key;
    g.second.push_back(std::move(r));
  }
  std::vector<LeaderboardRow> rows;
  const json filters = f.to_json();
  for (auto& [k, g] : groups) {
    rows.push_back({g.first, metrics::summarize(g.second, filters)});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.report.crr_percent > b.report.crr_percent;
  });
  return rows;
}

json to_json(const LeaderboardRow& row) {
  const auto& r = row.report;
  auto opt = [](const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
  };
  return {{"group", row.group},
          {"crr", r.crr_percent},
          {"epr", opt(r.epr_percent)},
          {"file_iou", opt(r.file_iou_mean)},
          {"function_iou", opt(r.function_iou_mean)},
          {"mean_cost", r.mean_cost},
          {"mean_wall_time_seconds", r.mean_wall_time_seconds},
          {"n_bugs", r.n_bugs},
          {"n_attempts", r.n_attempts}};
}

std::vector<std::string> toughest_bugs(const Snapshot& snap,
                                       const FilterSpec& f) {
  std::map<std::string, bool> solved;
  for (const auto& r : filter_records(snap, f)) {
    solved[r.bug_id] = solved[r.bug_id] || r.crash_resolved;
  }
  std::vector<std::string> out;
  for (const auto& [id, s] : solved) {
    if (!s) out.push_back(id);
  }
  return out;
}

DashboardServer::DashboardServer(const Store& store) : store_(store) {
  service_.get("/api/health", [this](const http::Request&) {
    const Snapshot snap = store_.snapshot();
    return ok({{"status", "ok"},
               {"bugs", snap.bugs.size()},
               {"evaluations", snap.evaluations.size()}});
  });

  service_.get("/api/bugs", [this](const http::Request& req) {
    return guarded([&] {
      const auto f = parse_filter(req.params, {"page", "page_size"});
      const auto page = parse_page(req.params);
      const BugPage p = query_bugs(store_.snapshot(), f, page);
      return ok({{"total", p.total},
                 {"page", p.page},
                 {"page_size", p.page_size},
                 {"filters", f.to_json()},
                 {"items", p.items}});
    });
  });

  service_.get("/api/runs", [this](const http::Request& req) {
    return guarded([&] {
      const auto f = parse_filter(req.params, {"page", "page_size", "include"});
      const auto page = parse_page(req.params);
      bool with_trajectory = false;
      for (auto [it, end] = req.params.equal_range("include"); it != end; ++it) {
        if (it->second == "trajectory") {
          with_trajectory = true;
        } else {
          throw InvalidFilter("include", "only 'trajectory' is supported");
        }
      }
      const Snapshot snap = store_.snapshot();
      const auto records = filter_records(snap, f);
      json items = json::array();
      const long begin = (page.page - 1) * page.page_size;
      for (long i = begin;
           i < long(records.size()) && i < begin + page.page_size; ++i) {
        const auto& r = records[std::size_t(i)];
        json item = r;
        item["agent"] = agent_json(snap.agent(r.experiment, r.agent_name));
        if (with_trajectory) {
          auto run = store_.run(r.experiment, r.bug_id, r.agent_name,
                                r.attempt_index);
          item["trajectory"] = run ? json(run->trajectory) : json(nullptr);
          item["patch"] = run ? json(run->patch) : json(nullptr);
        }
        items.push_back(std::move(item));
      }
      return ok({{"total", records.size()},
                 {"page", page.page},
                 {"page_size", page.page_size},
                 {"filters", f.to_json()},
                 {"items", items}});
    });
  });

  service_.get("/api/leaderboard", [this](const http::Request& req) {
    return guarded([&] {
      const auto f = parse_filter(req.params, {"group_by"});
      auto it = req.params.find("group_by");
      const std::string group_by =
          it == req.params.end() ? "scaffold_model" : it->second;
      json rows = json::array();
      for (const auto& row : leaderboard(store_.snapshot(), group_by, f)) {
        rows.push_back(to_json(row));
      }
      return ok({{"group_by", group_by}, {"filters", f.to_json()},
                 {"rows", rows}});
    });
  });

  service_.get("/api/toughest", [this](const http::Request& req) {
    return guarded([&] {
      const auto f = parse_filter(req.params);
      return ok({{"filters", f.to_json()},
                 {"bugs", toughest_bugs(store_.snapshot(), f)}});
    });
  });

  service_.get("/api/metrics", [this](const http::Request& req) {
    return guarded([&] {
      const auto f = parse_filter(req.params, {"cutoff", "k", "estimator"});
      const Snapshot snap = store_.snapshot();
      const auto records = filter_records(snap, f);
      json body = {{"filters", f.to_json()}};
      body["report"] =
          records.empty() ? json(nullptr) : json(metrics::summarize(records, f.to_json()));

      std::vector<corpus::BugRecord> bugs;
      for (const auto& b : snap.bugs) {
        if (bug_matches(f, b)) bugs.push_back(b);
      }
      body["dataset"] =
          bugs.empty() ? json(nullptr) : json(corpus::dataset_stats(bugs));

      if (auto it = req.params.find("cutoff"); it != req.params.end()) {
        const Date cutoff = parse_date("cutoff", it->second);
        long k = 0;
        if (auto kt = req.params.find("k"); kt != req.params.end()) {
          k = parse_integer("k", kt->second);
          if (k < 1) throw InvalidFilter("k", "must be at least 1");
        }
        auto estimator = metrics::Estimator::kUnbiased;
        if (auto et = req.params.find("estimator"); et != req.params.end()) {
          if (et->second == "first_k") {
            estimator = metrics::Estimator::kFirstK;
          } else if (et->second != "unbiased") {
            throw InvalidFilter("estimator", "expected unbiased or first_k");
          }
        }
        try {
          body["cutoff"] = metrics::cutoff_report(records, snap.bugs, cutoff,
                                                  k, estimator);
        } catch (const metrics::InsufficientAttempts& e) {
          throw InvalidFilter("k", e.what());
        }
      }
      return ok(body);
    });
  });
}

int DashboardServer::start(const std::string& host, int port) {
  return service_.start(host, port);
}

}  // namespace crashbench::dashboard
