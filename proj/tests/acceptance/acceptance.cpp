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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "crashbench/analysis.hpp"
#include "crashbench/corpus.hpp"
#include "crashbench/crf.hpp"
#include "crashbench/dashboard.hpp"
#include "crashbench/evaluator.hpp"
#include "crashbench/fs.hpp"
#include "crashbench/metrics.hpp"
#include "crashbench/patch.hpp"
#include "crashbench/pipeline.hpp"
#include "crashbench/simulator.hpp"
#include "crashbench/store.hpp"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using namespace crashbench;
using nlohmann::json;

const fs::path kFixtures = CRASHBENCH_FIXTURES;
const fs::path kE2eConfig = CRASHBENCH_E2E_CONFIG;

// Collects failed checks for the criterion currently running.
struct Check {
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    if (!(std::fabs(got - want) <= tol)) {
      std::ostringstream s;
      s << what << ": got " << got << ", want " << want << " +/- " << tol;
      failures.push_back(s.str());
    }
  }
};

std::string fmt(double v, int prec = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

corpus::BugRecord fixture_bug(const std::string& id) {
  corpus::BugRecord b;
  b.bug_id = id;
  b.title = "fixture crash";
  b.reported_date = Date::parse("2025-01-10");
  b.kernel_commit = "fixture-v1";
  b.reproducer = "sha256:" + std::string(64, '0');
  b.crash_report = "BUG: KASAN: null-ptr-deref";
  b.reproduction_rate = 1.0;
  return b;
}

// Removes the scratch directory on scope exit.
struct ScratchDir {
  fs::path path;
  explicit ScratchDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("crashbench-acc-" + tag + "-" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

// --- criteria -----------------------------------------------------------------

void judge_alignment_arithmetic(Check& c) {
  const auto a = metrics::judge_alignment({20, 51, 3, 5});
  c.near(a.accuracy, 89.87, 0.01, "accuracy");
  c.near(a.precision, 86.96, 0.01, "precision");
  c.near(a.recall, 80.00, 0.01, "recall");
  c.near(a.f1, 83.33, 0.01, "f1");
}

void relative_uplift_arithmetic(Check& c) {
  struct Row {
    double before, after, want;
  };
  const std::vector<Row> rows = {
      {78.44, 72.15, 8.72}, {15.60, 12.97, 20.28}, {92.20, 88.92, 3.69},
      {33.03, 26.27, 25.73}, {77.84, 72.85, 6.85}, {16.74, 13.64, 22.73},
      {75.03, 58.11, 29.12}};
  for (const auto& r : rows) {
    c.near(metrics::relative_change(r.before, r.after), r.want, 0.01,
           "(" + fmt(r.before) + ", " + fmt(r.after) + ")");
  }
}

// Fraction of size-k subsets of `row` holding at least one success, counted
// by walking every subset bitmask.
std::pair<long, long> enumerate_subsets(const std::vector<bool>& row, long k) {
  const long n = long(row.size());
  long hits = 0, total = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    ++total;
    for (long i = 0; i < n; ++i) {
      if ((mask >> i) & 1u && row[i]) {
        ++hits;
        break;
      }
    }
  }
  return {hits, total};
}

void pass_at_k_properties(Check& c) {
  std::mt19937_64 rng(20260117);
  for (int trial = 0; trial < 1000; ++trial) {
    const long n = 1 + long(rng() % 8);
    const long bugs = 1 + long(rng() % 12);
    const double p = std::uniform_real_distribution<double>(0, 1)(rng);
    std::bernoulli_distribution hit(p);
    metrics::AttemptMatrix m;
    for (long b = 0; b < bugs; ++b) {
      auto& row = m.rows["bug" + std::to_string(b)];
      for (long i = 0; i < n; ++i) row.push_back(hit(rng));
    }
    const std::string tag = "matrix " + std::to_string(trial);
    double prev = -1.0;
    for (long k = 1; k <= n; ++k) {
      const double v = metrics::pass_at_k(m, k);
      c.expect(v >= prev, tag + ": pass@k not monotone at k=" + std::to_string(k));
      prev = v;
      double sum = 0.0;
      for (const auto& [id, row] : m.rows) {
        const auto [hits, total] = enumerate_subsets(row, k);
        const double exact = double(hits) / double(total);
        const long cnt = long(std::count(row.begin(), row.end(), true));
        c.expect(metrics::pass_at_k_single(n, cnt, k) == exact,
                 tag + ": single-row estimator differs from enumeration");
        sum += exact;
      }
      c.expect(v == 100.0 * sum / double(m.rows.size()),
               tag + ": pass@" + std::to_string(k) + " differs from enumeration");
    }
    c.expect(metrics::pass_at_k(m, 1) == metrics::mean_at_k(m, 1),
             tag + ": pass@1 != mean@1");
    long any = 0;
    for (const auto& [id, row] : m.rows) {
      any += std::any_of(row.begin(), row.end(), [](bool b) { return b; });
    }
    c.expect(metrics::pass_at_k(m, n) == 100.0 * double(any) / double(bugs),
             tag + ": pass@n != any-success fraction");
  }
}

void reproducibility_filter_statistics(Check& c) {
  const int kBugs = 10000;
  for (double p : {0.1, 0.3, 0.5}) {
    exec::Simulator sim(
        exec::directory_tree_resolver(kFixtures / "trees"));
    exec::SimScenario s;
    s.bug_id = "flaky";
    s.crash_prob_unfixed = p;
    sim.add_scenario(s);
    const auto bug = fixture_bug("flaky");
    long admitted = 0;
    for (int i = 0; i < kBugs; ++i) {
      admitted += corpus::filter_reproducible(bug, sim, 5, std::uint64_t(i)).admitted;
    }
    const double expected = 1.0 - std::pow(1.0 - p, 5);
    const double sigma = std::sqrt(expected * (1.0 - expected) / kBugs);
    const double rate = double(admitted) / kBugs;
    std::cout << "  p=" << p << ": admitted " << fmt(rate, 4) << ", expected "
              << fmt(expected, 4) << ", sigma " << fmt(sigma, 4) << "\n";
    c.near(rate, expected, 3 * sigma, "admission rate at p=" + fmt(p, 1));
  }
}

void patch_analyzer_oracle(Check& c) {
  const fs::path dir = kFixtures / "diffs";
  const json expected = json::parse(*read_file(dir / "expected.json"));
  patch::DirectoryTree tree(kFixtures / "trees" / "fixture-v1");
  long checked = 0;
  for (const auto& [name, want] : expected.items()) {
    const auto text = read_file(dir / (name + ".diff"));
    c.expect(text.has_value(), name + ".diff missing");
    if (!text) continue;
    const auto p = patch::parse_unified_diff(*text);
    const auto got = patch::extract_modified_functions(p, tree);
    const auto files = want.at("files").get<std::set<std::string>>();
    const auto funcs = want.at("functions").get<std::set<std::string>>();
    c.expect(got.modified_files == files, name + ": file set differs from oracle");
    if (got.modified_functions != funcs) {
      std::string diff;
      for (const auto& f : got.modified_functions) {
        if (!funcs.count(f)) diff += " +" + f;
      }
      for (const auto& f : funcs) {
        if (!got.modified_functions.count(f)) diff += " -" + f;
      }
      c.expect(false, name + ": function set differs from oracle:" + diff);
    }
    ++checked;
  }
  c.expect(checked == 50, "expected 50 diffs, found " + std::to_string(checked));

  std::mt19937_64 rng(7);
  auto random_set = [&] {
    std::set<std::string> s;
    const int n = int(rng() % 6);
    for (int i = 0; i < n; ++i) s.insert("f" + std::to_string(rng() % 8));
    return s;
  };
  for (int i = 0; i < 2000; ++i) {
    const auto a = random_set(), b = random_set();
    const double ab = patch::iou(a, b), ba = patch::iou(b, a);
    c.expect(ab == ba, "iou not symmetric");
    c.expect(ab >= 0.0 && ab <= 1.0, "iou out of [0, 1]");
    c.expect(patch::iou(a, a) == 1.0, "iou(a, a) != 1");
    std::set<std::string> inter;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                          std::inserter(inter, inter.end()));
    if (!a.empty() || !b.empty()) {
      c.expect((ab == 0.0) == inter.empty(), "iou zero iff disjoint");
    }
  }
}

void crf_protocol_totality(Check& c) {
  const fs::path tree_root = kFixtures / "trees";
  const std::string target = "drivers/net/net00.c";
  exec::Simulator sim(exec::directory_tree_resolver(tree_root));
  exec::SimScenario s;
  s.bug_id = "crf-bug";
  s.compile_predicate = exec::Rule::parse(json{{"adds_line_containing", "#error"}});
  s.fix_predicate = exec::Rule::parse(json{{"touches_function", target + "::net00_read"}});
  s.crash_report = "BUG: KASAN: null-ptr-deref in net00_read";
  s.compile_log = "net00.c:1:2: error: #error";
  sim.add_scenario(s);
  const auto bug = fixture_bug("crf-bug");
  crf::Gateway gw(sim, [&](const std::string& id) -> std::optional<corpus::BugRecord> {
    if (id == bug.bug_id) return bug;
    return std::nullopt;
  });

  const auto base = patch::read_tree(tree_root / "fixture-v1");
  // Fixing edit: inside net00_read. Non-fixing: inside net00_open.
  auto after_fix = base;
  {
    auto& t = after_fix.at(target);
    const auto pos = t.find("\n{\n", t.find("net00_read("));
    t.insert(pos + 3, "\tif (!buf)\n\t\treturn -EFAULT;\n");
  }
  auto after_other = base;
  {
    auto& t = after_other.at(target);
    const auto pos = t.find("\n{\n", t.find("net00_open("));
    t.insert(pos + 3, "\tmight_sleep();\n");
  }
  auto after_broken = base;
  after_broken.at(target) = "#error broken\n" + after_broken.at(target);

  const auto run = [&](const patch::FileMap& after) {
    return gw.handle_run_kernel({bug.bug_id, patch::diff_trees(base, after), "1"});
  };

  const auto resolved = run(after_fix);
  c.expect(resolved.kind == crf::VerdictKind::kCrashResolved,
           "fixing edit did not yield CRASH_RESOLVED");
  c.expect(resolved.crashes == 0 && resolved.trials == 10, "resolved trial counts");

  const auto reproduced = run(after_other);
  c.expect(reproduced.kind == crf::VerdictKind::kCrashReproduced,
           "non-fixing edit did not yield CRASH_REPRODUCED");
  c.expect(reproduced.payload.find("net00_read") != std::string::npos,
           "reproduced verdict lacks the crash report");

  const long repro_before = sim.stats().reproductions_submitted;
  const auto compile = run(after_broken);
  c.expect(compile.kind == crf::VerdictKind::kCompileError,
           "#error edit did not yield COMPILE_ERROR");
  c.expect(compile.payload.find("error") != std::string::npos,
           "compile verdict lacks the compiler log");
  c.expect(sim.stats().reproductions_submitted == repro_before,
           "compile error submitted a reproduction job");
  c.expect(compile.trials == 0, "compile error reports reproduction trials");
  c.expect(crf::format_tool_output(resolved).rfind("CRASH_RESOLVED", 0) == 0 &&
               crf::format_tool_output(reproduced).rfind("CRASH_REPRODUCED", 0) == 0 &&
               crf::format_tool_output(compile).rfind("COMPILE_ERROR", 0) == 0,
           "tool output headers");
}

std::string slurp(const fs::path& p) { return read_file(p).value_or(""); }

void end_to_end_pipeline(Check& c) {
  ScratchDir scratch("e2e");
  json cfg = json::parse(slurp(kE2eConfig));
  cfg["corpus"] = (scratch.path / "corpus").string();
  cfg["store"] = (scratch.path / "crashbench.db").string();
  cfg["results"] = (scratch.path / "results").string();
  const auto config =
      pipeline::ExperimentConfig::from_json(cfg, kE2eConfig.parent_path());

  const auto first = pipeline::run_pipeline(config);
  const fs::path report_path = scratch.path / "results" / "fixture" / "report.json";
  const std::string report1 = slurp(report_path);
  c.expect(!report1.empty(), "report.json not written");

  // Curation: bugs 01-10 always crash, 11-12 never do.
  const auto& curate = first.stages.at(1).counts;
  c.expect(curate.at("admitted") == 10 && curate.at("rejected") == 2,
           "curation admitted/rejected = " + curate.at("admitted").dump() + "/" +
               curate.at("rejected").dump());

  dashboard::Store store(config.store);
  c.expect(store.count_runs("fixture") == 60, "expected 60 runs (10 bugs x 3 agents x 2)");
  c.expect(store.count_evaluations("fixture") == 60, "expected 60 evaluations");

  // Hand-computed from the scenario rules:
  //  fixer   touches the faulting function on all 10 curated bugs, so every
  //          attempt resolves; it replays the developer patch on bugs 01-05
  //          and a different edit on 06-08, so EPR = 5 / 8.
  //  idler   leaves the tree untouched; the crash persists, EPR 0.
  //  breaker adds "#error", so nothing builds; CRR 0, EPR 0.
  struct Want {
    double crr, epr, file_iou, function_iou, cost;
  };
  const std::map<std::string, Want> want = {
      {"fixer", {100.0, 62.5, 1.0, 1.0, 1.0}},
      {"idler", {0.0, 0.0, 0.0, 0.0, 0.2}},
      {"breaker", {0.0, 0.0, 1.0, 0.0, 0.6}}};
  const auto snap = store.snapshot();
  dashboard::FilterSpec f;
  f.experiment.insert("fixture");
  const auto rows = dashboard::leaderboard(snap, "config", f);
  c.expect(rows.size() == 3, "leaderboard rows");
  c.expect(!rows.empty() && rows.front().group.value("agent_name", "") == "fixer",
           "fixer tops the leaderboard");
  for (const auto& row : rows) {
    const std::string name = row.group.value("agent_name", "");
    const auto it = want.find(name);
    c.expect(it != want.end(), "unexpected agent " + name);
    if (it == want.end()) continue;
    const auto& w = it->second;
    const auto& r = row.report;
    std::cout << "  " << name << ": CRR " << fmt(r.crr_percent) << " EPR "
              << (r.epr_percent ? fmt(*r.epr_percent) : "n/a") << "\n";
    c.near(r.crr_percent, w.crr, 1e-9, name + " CRR");
    c.expect(r.epr_percent.has_value(), name + " EPR missing");
    if (r.epr_percent) c.near(*r.epr_percent, w.epr, 1e-9, name + " EPR");
    if (r.file_iou_mean) c.near(*r.file_iou_mean, w.file_iou, 1e-9, name + " file IoU");
    if (r.function_iou_mean) {
      c.near(*r.function_iou_mean, w.function_iou, 1e-9, name + " function IoU");
    }
    c.near(r.mean_cost, w.cost, 1e-9, name + " mean cost");
    c.expect(r.n_bugs == 10 && r.n_attempts == 20, name + " record counts");
  }

  // The fixer calls run_kernel once per attempt.
  long crf_calls = 0;
  for (const auto& e : snap.evaluations) {
    if (e.agent_name == "fixer") crf_calls += e.crf_calls;
  }
  c.expect(crf_calls == 20, "fixer CRF calls = " + std::to_string(crf_calls));

  const auto second = pipeline::run_pipeline(config);
  for (const auto& s : second.stages) {
    c.expect(s.up_to_date, "rerun stage " + pipeline::to_string(s.stage) +
                               " was not up to date");
  }
  c.expect(slurp(report_path) == report1, "rerun changed report.json");
  c.expect(store.count_runs("fixture") == 60 &&
               store.count_evaluations("fixture") == 60,
           "rerun changed the stored record counts");
}

void strict_resolution_semantics(Check& c) {
  exec::Simulator sim(exec::directory_tree_resolver(kFixtures / "trees"));
  exec::SimScenario s;
  s.bug_id = "flaky";
  s.fix_predicate = exec::Rule::constant(false);
  s.crash_prob_unfixed = 0.2;
  sim.add_scenario(s);
  const auto bug = fixture_bug("flaky");
  const auto base = patch::read_tree(kFixtures / "trees" / "fixture-v1");
  auto after = base;
  after.at("drivers/net/net00.c") += "/* not a fix */\n";
  const std::string non_fixing = patch::diff_trees(base, after);

  const int kEvals = 5000;
  long resolved = 0;
  for (int i = 0; i < kEvals; ++i) {
    eval::CrashEvalConfig cfg;
    cfg.runs = 25;
    cfg.seed = std::uint64_t(i);
    const auto r = eval::evaluate_crash_resolution(bug, non_fixing, sim, cfg);
    c.expect(r.runs == 25 || r.crashes > 0, "resolved verdict used fewer than 25 runs");
    resolved += r.crash_resolved;
  }
  const double expected = std::pow(0.8, 25);
  const double sigma = std::sqrt(expected * (1.0 - expected) / kEvals);
  const double rate = double(resolved) / kEvals;
  std::cout << "  resolved " << resolved << "/" << kEvals << " = " << fmt(rate, 5)
            << ", expected " << fmt(expected, 5) << ", sigma " << fmt(sigma, 5) << "\n";
  c.near(rate, expected, 3 * sigma, "resolution rate");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
      {"judge-alignment arithmetic", judge_alignment_arithmetic},
      {"relative-uplift arithmetic", relative_uplift_arithmetic},
      {"pass@k properties", pass_at_k_properties},
      {"reproducibility-filter statistics", reproducibility_filter_statistics},
      {"patch-analyzer oracle equivalence", patch_analyzer_oracle},
      {"CRF protocol totality", crf_protocol_totality},
      {"end-to-end pipeline", end_to_end_pipeline},
      {"strict 25-run resolution semantics", strict_resolution_semantics},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Check c;
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    std::cout << (c.failures.empty() ? "PASS" : "FAIL") << "  " << name << "\n";
    for (std::size_t i = 0; i < c.failures.size() && i < 20; ++i) {
      std::cout << "    " << c.failures[i] << "\n";
    }
    if (c.failures.size() > 20) {
      std::cout << "    ... " << c.failures.size() - 20 << " more\n";
    }
    failed += !c.failures.empty();
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << criteria.size() - failed
            << "/" << criteria.size() << "\n";
  return failed ? 1 : 0;
}
