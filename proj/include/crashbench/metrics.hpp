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

#ifndef CRASHBENCH_METRICS_HPP_
#define CRASHBENCH_METRICS_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crashbench/corpus.hpp"
#include "crashbench/date.hpp"
#include "crashbench/error.hpp"
#include "crashbench/evaluator.hpp"
#include "json.hpp"

namespace crashbench::metrics {

class EmptyInput : public Error {
 public:
  EmptyInput() : Error("EmptyInput", "no records to aggregate") {}
};

class MixedOpenBugs : public Error {
 public:
  explicit MixedOpenBugs(const std::string& bug_id)
      : Error("MixedOpenBugs", "open bug " + bug_id + " in an EPR input") {}
};

class InsufficientAttempts : public Error {
 public:
  InsufficientAttempts(const std::string& bug_id, long n, long k)
      : Error("InsufficientAttempts",
              bug_id + " has " + std::to_string(n) + " attempts, k=" +
                  std::to_string(k)) {}
};

class DivisionByZero : public Error {
 public:
  DivisionByZero() : Error("DivisionByZero", "relative change against zero") {}
};

class UndefinedMetric : public Error {
 public:
  explicit UndefinedMetric(const std::string& name)
      : Error("UndefinedMetric", name + " has a zero denominator") {}
};

class EmptySide : public Error {
 public:
  explicit EmptySide(const std::string& which)
      : Error("EmptySide", "no records on the " + which + " side of the cutoff"),
        which_(which) {}
  const std::string& which() const noexcept { return which_; }

 private:
  std::string which_;
};

// Round half to even at `decimals` places, treating values within 1e-9 of a
// decimal tie as the tie.
double round_half_even(double x, int decimals = 2);

// 100 x mean over bugs of (resolved attempts / attempts).
double crr(const std::vector<eval::EvaluationRecord>& records);
// As crr, counting attempts that are resolved and judged equivalent. Open
// bugs (equivalence not_applicable) are rejected.
double epr(const std::vector<eval::EvaluationRecord>& records);

enum class Success { kCrashResolved, kResolvedAndEquivalent };

bool succeeded(const eval::EvaluationRecord& r, Success s);

// Ordered success flags per bug, sorted by attempt index.
// One row per (experiment, agent, bug), ordered by attempt index. Rows are
// keyed "experiment/agent/bug" so agents never share a row.
struct AttemptMatrix {
  std::map<std::string, std::vector<bool>> rows;

  static AttemptMatrix from_records(
      const std::vector<eval::EvaluationRecord>& records, Success success);
  long min_attempts() const;
};

enum class Estimator { kUnbiased, kFirstK };

// Probability that at least one of k draws without replacement from n
// attempts (c successful) succeeds: 1 - C(n-c,k)/C(n,k). Exact integer
// arithmetic while C(n,k) fits in 64 bits.
double pass_at_k_single(long n, long c, long k);

double pass_at_k(const AttemptMatrix& m, long k,
                 Estimator estimator = Estimator::kUnbiased);
double mean_at_k(const AttemptMatrix& m, long k);

// 100 x (before - after) / after.
double relative_change(double before, double after);

struct ConfusionCounts {
  long tp = 0, tn = 0, fp = 0, fn = 0;
};

struct JudgeAlignment {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;  // percentages
};

JudgeAlignment judge_alignment(const ConfusionCounts& c);

struct MetricsReport {
  double crr_percent = 0.0;
  // Only over records of fixed bugs; absent when none are in scope.
  std::optional<double> epr_percent;
  std::optional<double> crr_fixed_percent;
  std::optional<double> file_iou_mean;
  std::optional<double> function_iou_mean;
  long n_bugs = 0;
  long n_attempts = 0;
  long n_fixed_bugs = 0;
  double mean_cost = 0.0;
  double mean_wall_time_seconds = 0.0;
  nlohmann::json filters = nlohmann::json::object();
};

void to_json(nlohmann::json& j, const MetricsReport& v);

MetricsReport summarize(const std::vector<eval::EvaluationRecord>& records,
                        nlohmann::json filters = nlohmann::json::object());

struct CutoffCell {
  std::string metric;   // CRR or EPR
  std::string measure;  // Pass@1, Pass@k, Mean@k
  double before = 0.0;  // rounded to two decimals
  double after = 0.0;
  // Relative change of the rounded cells, rounded; absent when after is 0.
  std::optional<double> change;
};

struct CutoffReport {
  Date cutoff;
  long k = 0;
  Estimator estimator = Estimator::kUnbiased;
  MetricsReport before;
  MetricsReport after;
  std::vector<CutoffCell> cells;
};

void to_json(nlohmann::json& j, const CutoffReport& v);

// Records of open bugs and of bugs missing from `bugs` are ignored. k = 0
// picks the smallest attempt count present on either side.
CutoffReport cutoff_report(const std::vector<eval::EvaluationRecord>& records,
                           const std::vector<corpus::BugRecord>& bugs,
                           const Date& cutoff, long k = 0,
                           Estimator estimator = Estimator::kUnbiased);

std::string render_report(const MetricsReport& r);
std::string render_cutoff_table(const CutoffReport& r);

}  // namespace crashbench::metrics

#endif  // CRASHBENCH_METRICS_HPP_
