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

#include "crashbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

namespace crashbench::metrics {
namespace {

using eval::EvaluationRecord;
using nlohmann::json;

struct BugTally {
  long attempts = 0;
  long hits = 0;
};

template <typename Pred>
double per_bug_mean(const std::vector<EvaluationRecord>& records, Pred pred) {
  if (records.empty()) throw EmptyInput();
  std::map<std::string, BugTally> bugs;
  for (const auto& r : records) {
    auto& t = bugs[r.bug_id];
    ++t.attempts;
    if (pred(r)) ++t.hits;
  }
  double sum = 0.0;
  for (const auto& [id, t] : bugs) sum += double(t.hits) / double(t.attempts);
  return 100.0 * sum / double(bugs.size());
}

// C(n, k) if it fits in 64 bits.
std::optional<unsigned __int128> binomial(long n, long k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (long i = 0; i < k; ++i) {
    r = r * unsigned(n - i) / unsigned(i + 1);
    if (r > std::numeric_limits<std::uint64_t>::max()) return std::nullopt;
  }
  return r;
}

json optional_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::string fmt(double v, const char* spec = "%.2f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string estimator_name(Estimator e) {
  return e == Estimator::kUnbiased ? "unbiased" : "first_k";
}

}  // namespace

double round_half_even(double x, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double scaled = x * scale;
  const double lo = std::floor(scaled);
  const double frac = scaled - lo;
  double r;
  if (std::fabs(frac - 0.5) < 1e-9) {
    r = std::fmod(lo, 2.0) == 0.0 ? lo : lo + 1.0;
  } else {
    r = std::round(scaled);
  }
  return r / scale;
}

double crr(const std::vector<EvaluationRecord>& records) {
  return per_bug_mean(records,
                      [](const EvaluationRecord& r) { return r.crash_resolved; });
}

double epr(const std::vector<EvaluationRecord>& records) {
  for (const auto& r : records) {
    if (r.equivalence == eval::Equivalence::kNotApplicable) {
      throw MixedOpenBugs(r.bug_id);
    }
  }
  return per_bug_mean(records, [](const EvaluationRecord& r) {
    return succeeded(r, Success::kResolvedAndEquivalent);
  });
}

bool succeeded(const EvaluationRecord& r, Success s) {
  if (s == Success::kCrashResolved) return r.crash_resolved;
  return r.crash_resolved && r.equivalence == eval::Equivalence::kEquivalent;
}

AttemptMatrix AttemptMatrix::from_records(
    const std::vector<EvaluationRecord>& records, Success success) {
  std::map<std::string, std::vector<std::pair<int, bool>>> tmp;
  for (const auto& r : records) {
    tmp[r.experiment + "/" + r.agent_name + "/" + r.bug_id].emplace_back(
        r.attempt_index, succeeded(r, success));
  }
  AttemptMatrix m;
  for (auto& [id, v] : tmp) {
    std::sort(v.begin(), v.end());
    auto& row = m.rows[id];
    for (const auto& [idx, ok] : v) row.push_back(ok);
  }
  return m;
}

long AttemptMatrix::min_attempts() const {
  long n = 0;
  bool first = true;
  for (const auto& [id, row] : rows) {
    if (first || long(row.size()) < n) n = long(row.size());
    first = false;
  }
  return n;
}

double pass_at_k_single(long n, long c, long k) {
  if (n < 1 || c < 0 || c > n || k < 1 || k > n) {
    throw InvalidField("pass_at_k", "need 0 <= c <= n and 1 <= k <= n");
  }
  if (n - c < k) return 1.0;
  const auto total = binomial(n, k);
  const auto misses = binomial(n - c, k);
  if (total && misses) {
    return double(std::uint64_t(*total - *misses)) / double(std::uint64_t(*total));
  }
  // Product form for large n: C(n-c,k)/C(n,k) = prod_{i=n-c+1}^{n} (1 - k/i).
  double miss = 1.0;
  for (long i = n - c + 1; i <= n; ++i) miss *= 1.0 - double(k) / double(i);
  return 1.0 - miss;
}

double pass_at_k(const AttemptMatrix& m, long k, Estimator estimator) {
  if (m.rows.empty()) throw EmptyInput();
  double sum = 0.0;
  for (const auto& [id, row] : m.rows) {
    const long n = long(row.size());
    if (k < 1 || n < k) throw InsufficientAttempts(id, n, k);
    if (estimator == Estimator::kFirstK) {
      sum += std::any_of(row.begin(), row.begin() + k, [](bool b) { return b; })
                 ? 1.0
                 : 0.0;
    } else {
      const long c = long(std::count(row.begin(), row.end(), true));
      sum += pass_at_k_single(n, c, k);
    }
  }
  return 100.0 * sum / double(m.rows.size());
}

double mean_at_k(const AttemptMatrix& m, long k) {
  if (m.rows.empty()) throw EmptyInput();
  double sum = 0.0;
  for (const auto& [id, row] : m.rows) {
    const long n = long(row.size());
    if (k < 1 || n < k) throw InsufficientAttempts(id, n, k);
    sum += double(std::count(row.begin(), row.end(), true)) / double(n);
  }
  return 100.0 * sum / double(m.rows.size());
}

double relative_change(double before, double after) {
  if (after == 0.0) throw DivisionByZero();
  return 100.0 * (before - after) / after;
}

JudgeAlignment judge_alignment(const ConfusionCounts& c) {
  if (c.tp < 0 || c.tn < 0 || c.fp < 0 || c.fn < 0) {
    throw InvalidField("confusion", "counts must be non-negative");
  }
  const long total = c.tp + c.tn + c.fp + c.fn;
  if (total == 0) throw UndefinedMetric("accuracy");
  if (c.tp + c.fp == 0) throw UndefinedMetric("precision");
  if (c.tp + c.fn == 0) throw UndefinedMetric("recall");
  JudgeAlignment a;
  a.accuracy = 100.0 * double(c.tp + c.tn) / double(total);
  const double p = double(c.tp) / double(c.tp + c.fp);
  const double r = double(c.tp) / double(c.tp + c.fn);
  if (p + r == 0.0) throw UndefinedMetric("f1");
  a.precision = 100.0 * p;
  a.recall = 100.0 * r;
  a.f1 = 100.0 * 2.0 * p * r / (p + r);
  return a;
}

void to_json(json& j, const MetricsReport& v) {
  j = {{"crr_percent", v.crr_percent},
       {"epr_percent", optional_json(v.epr_percent)},
       {"crr_fixed_percent", optional_json(v.crr_fixed_percent)},
       {"file_iou_mean", optional_json(v.file_iou_mean)},
       {"function_iou_mean", optional_json(v.function_iou_mean)},
       {"n_bugs", v.n_bugs},
       {"n_attempts", v.n_attempts},
       {"n_fixed_bugs", v.n_fixed_bugs},
       {"mean_cost", v.mean_cost},
       {"mean_wall_time_seconds", v.mean_wall_time_seconds},
       {"filters", v.filters}};
}

MetricsReport summarize(const std::vector<EvaluationRecord>& records,
                        json filters) {
  if (records.empty()) throw EmptyInput();
  MetricsReport rep;
  rep.filters = std::move(filters);
  rep.crr_percent = crr(records);
  rep.n_attempts = long(records.size());

  std::set<std::string> bugs;
  std::vector<EvaluationRecord> fixed;
  double cost = 0.0;
  double wall = 0.0;
  for (const auto& r : records) {
    bugs.insert(r.bug_id);
    cost += r.dollar_cost;
    wall += r.wall_time_seconds;
    if (r.equivalence != eval::Equivalence::kNotApplicable) fixed.push_back(r);
  }
  rep.n_bugs = long(bugs.size());
  rep.mean_cost = cost / double(records.size());
  rep.mean_wall_time_seconds = wall / double(records.size());
  if (fixed.empty()) return rep;

  std::set<std::string> fixed_bugs;
  for (const auto& r : fixed) fixed_bugs.insert(r.bug_id);
  rep.n_fixed_bugs = long(fixed_bugs.size());
  rep.epr_percent = epr(fixed);
  rep.crr_fixed_percent = crr(fixed);

  std::map<std::string, std::pair<BugTally, std::pair<double, double>>> iou;
  for (const auto& r : fixed) {
    if (!r.localization) continue;
    auto& [tally, sums] = iou[r.bug_id];
    ++tally.attempts;
    sums.first += r.localization->file_iou;
    sums.second += r.localization->function_iou;
  }
  if (!iou.empty()) {
    double f = 0.0, g = 0.0;
    for (const auto& [id, e] : iou) {
      f += e.second.first / double(e.first.attempts);
      g += e.second.second / double(e.first.attempts);
    }
    rep.file_iou_mean = f / double(iou.size());
    rep.function_iou_mean = g / double(iou.size());
  }
  return rep;
}

void to_json(json& j, const CutoffReport& v) {
  json cells = json::array();
  for (const auto& c : v.cells) {
    cells.push_back({{"metric", c.metric},
                     {"measure", c.measure},
                     {"before", c.before},
                     {"after", c.after},
                     {"relative_change", optional_json(c.change)}});
  }
  j = {{"cutoff", v.cutoff.iso()},
       {"k", v.k},
       {"estimator", estimator_name(v.estimator)},
       {"before", v.before},
       {"after", v.after},
       {"cells", cells}};
}

CutoffReport cutoff_report(const std::vector<EvaluationRecord>& records,
                           const std::vector<corpus::BugRecord>& bugs,
                           const Date& cutoff, long k, Estimator estimator) {
  const auto split = corpus::split_by_cutoff(bugs, cutoff);
  std::set<std::string> before_ids, after_ids;
  for (const auto& b : split.before) before_ids.insert(b.bug_id);
  for (const auto& b : split.after) after_ids.insert(b.bug_id);

  std::vector<EvaluationRecord> before, after;
  for (const auto& r : records) {
    if (r.equivalence == eval::Equivalence::kNotApplicable) continue;
    if (before_ids.count(r.bug_id)) before.push_back(r);
    if (after_ids.count(r.bug_id)) after.push_back(r);
  }
  if (before.empty()) throw EmptySide("before");
  if (after.empty()) throw EmptySide("after");

  CutoffReport rep;
  rep.cutoff = cutoff;
  rep.estimator = estimator;
  rep.before = summarize(before, {{"fixed_before", cutoff.iso()}});
  rep.after = summarize(after, {{"fixed_after", cutoff.iso()}});

  const auto crr_b = AttemptMatrix::from_records(before, Success::kCrashResolved);
  const auto crr_a = AttemptMatrix::from_records(after, Success::kCrashResolved);
  const auto epr_b =
      AttemptMatrix::from_records(before, Success::kResolvedAndEquivalent);
  const auto epr_a =
      AttemptMatrix::from_records(after, Success::kResolvedAndEquivalent);
  rep.k = k > 0 ? k : std::min(crr_b.min_attempts(), crr_a.min_attempts());

  auto cell = [&](const char* metric, std::string measure, double b, double a) {
    CutoffCell c;
    c.metric = metric;
    c.measure = std::move(measure);
    c.before = round_half_even(b);
    c.after = round_half_even(a);
    if (c.after != 0.0) {
      c.change = round_half_even(relative_change(c.before, c.after));
    }
    rep.cells.push_back(std::move(c));
  };
  const std::string pk = "Pass@" + std::to_string(rep.k);
  const std::string mk = "Mean@" + std::to_string(rep.k);
  for (const auto& [name, mb, ma] :
       {std::tuple{"CRR", &crr_b, &crr_a}, std::tuple{"EPR", &epr_b, &epr_a}}) {
    cell(name, "Pass@1", pass_at_k(*mb, 1, estimator),
         pass_at_k(*ma, 1, estimator));
    if (rep.k > 1) {
      cell(name, pk, pass_at_k(*mb, rep.k, estimator),
           pass_at_k(*ma, rep.k, estimator));
    }
    cell(name, mk, mean_at_k(*mb, rep.k), mean_at_k(*ma, rep.k));
  }
  return rep;
}

std::string render_report(const MetricsReport& r) {
  std::ostringstream out;
  auto opt = [](const std::optional<double>& v, const char* spec) {
    return v ? fmt(*v, spec) : std::string("n/a");
  };
  out << "bugs " << r.n_bugs << " (fixed " << r.n_fixed_bugs << "), attempts "
      << r.n_attempts << "\n";
  out << "CRR        " << fmt(round_half_even(r.crr_percent)) << "%\n";
  out << "EPR        " << opt(r.epr_percent, "%.2f%%") << "\n";
  out << "File IoU   " << opt(r.file_iou_mean, "%.4f") << "\n";
  out << "Func IoU   " << opt(r.function_iou_mean, "%.4f") << "\n";
  out << "Mean cost  $" << fmt(r.mean_cost) << "\n";
  out << "Mean time  " << fmt(r.mean_wall_time_seconds / 60.0) << " min\n";
  return out.str();
}

std::string render_cutoff_table(const CutoffReport& r) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-6s %-9s %14s %14s %10s\n", "Metric",
                "Measure", "Before cutoff", "After cutoff", "Change");
  out << "Cutoff " << r.cutoff.iso() << " (" << estimator_name(r.estimator)
      << " estimator)\n" << line;
  for (const auto& c : r.cells) {
    char change[32] = "n/a";
    if (c.change) std::snprintf(change, sizeof change, "%+.2f%%", *c.change);
    std::snprintf(line, sizeof line, "%-6s %-9s %14.2f %14.2f %10s\n",
                  c.metric.c_str(), c.measure.c_str(), c.before, c.after,
                  change);
    out << line;
  }
  return out.str();
}

}  // namespace crashbench::metrics
