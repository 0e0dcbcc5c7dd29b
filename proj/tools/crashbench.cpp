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

#include <csignal>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crashbench/dashboard.hpp"
#include "crashbench/error.hpp"
#include "crashbench/pipeline.hpp"
#include "crashbench/remote_backend.hpp"
#include "crashbench/simulator.hpp"
#include "crashbench/store.hpp"

namespace {

namespace fs = std::filesystem;
namespace pl = crashbench::pipeline;

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

struct GlobalFlags {
  std::string config;
  std::string corpus;
  std::string experiment;
  std::string backend;
  std::string endpoint;
  std::optional<std::uint64_t> seed;
  bool json = false;
  bool quiet = false;
};

pl::ExperimentConfig load_config(const GlobalFlags& g) {
  if (g.config.empty()) throw pl::ConfigError("--config is required");
  auto c = pl::ExperimentConfig::load(g.config);
  if (!g.corpus.empty()) c.corpus = fs::absolute(g.corpus);
  if (!g.experiment.empty()) c.experiment = g.experiment;
  if (!g.backend.empty()) c.backend.kind = g.backend;
  if (!g.endpoint.empty()) c.backend.endpoint = g.endpoint;
  if (g.seed) c.seed = *g.seed;
  return c;
}

void print_summary(const GlobalFlags& g, const pl::PipelineSummary& s) {
  if (g.json) {
    std::cout << s.to_json().dump(2) << "\n";
  } else {
    std::cout << s.render();
  }
}

int run_stages(const GlobalFlags& g, std::vector<pl::Stage> stages, bool force) {
  const auto config = load_config(g);
  pl::PipelineOptions opts;
  opts.stages = std::move(stages);
  opts.force = force;
  opts.log = g.quiet ? nullptr : &std::cerr;
  print_summary(g, pl::run_pipeline(config, opts));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crashbench: benchmark crash-resolution agents on kernel bugs"};
  app.require_subcommand(1);
  // Global options may also follow the subcommand.
  app.fallthrough();
  GlobalFlags g;
  app.add_option("--config", g.config, "experiment config (JSON)");
  app.add_option("--corpus", g.corpus, "override the corpus directory");
  app.add_option("--experiment", g.experiment, "override the experiment name");
  app.add_option("--backend", g.backend, "execution backend")
      ->check(CLI::IsMember({"sim", "remote"}));
  app.add_option("--endpoint", g.endpoint, "remote backend base URL");
  app.add_option("--seed", g.seed, "override the experiment seed");
  app.add_flag("--json", g.json, "print summaries as JSON");
  app.add_flag("-q,--quiet", g.quiet, "suppress progress logging");

  bool force = false;
  std::vector<std::pair<pl::Stage, CLI::App*>> stage_cmds;
  const std::vector<std::pair<pl::Stage, std::string>> stage_help = {
      {pl::Stage::kIngest, "fetch crash reports into the corpus"},
      {pl::Stage::kCurate, "keep only bugs whose crash reproduces"},
      {pl::Stage::kRun, "run every agent on every curated bug"},
      {pl::Stage::kEvaluate, "score agent patches"},
      {pl::Stage::kReport, "write metrics and the leaderboard"}};
  for (const auto& [stage, help] : stage_help) {
    auto* cmd = app.add_subcommand(pl::to_string(stage), help);
    cmd->add_flag("--force", force, "discard results made under another config");
    stage_cmds.emplace_back(stage, cmd);
  }

  auto* pipe = app.add_subcommand("pipeline", "run all stages in order");
  bool schedule = false;
  int max_cycles = 0;
  std::vector<std::string> only;
  pipe->add_flag("--force", force, "discard results made under another config");
  pipe->add_flag("--schedule", schedule, "repeat on the configured interval");
  pipe->add_option("--max-cycles", max_cycles, "stop after N scheduled runs");
  pipe->add_option("--stages", only, "subset of stages to run")->delimiter(',');

  auto* serve = app.add_subcommand("serve", "serve the dashboard API");
  std::string db, host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--db", db, "results database (default: from --config)");
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "bind port");

  auto* backend = app.add_subcommand(
      "backend-server", "serve the simulated execution backend over HTTP");
  std::string scenarios, trees;
  int backend_port = 8090;
  backend->add_option("--scenarios", scenarios, "scenario directory")->required();
  backend->add_option("--trees", trees, "source tree directory")->required();
  backend->add_option("--host", host, "bind address");
  backend->add_option("--port", backend_port, "bind port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    for (const auto& [stage, cmd] : stage_cmds) {
      if (cmd->parsed()) return run_stages(g, {stage}, force);
    }
    if (pipe->parsed()) {
      std::vector<pl::Stage> stages;
      for (const auto& s : only) stages.push_back(pl::stage_from_string(s));
      if (stages.empty()) stages = pl::all_stages();
      if (!schedule) return run_stages(g, stages, force);
      const auto config = load_config(g);
      pl::PipelineOptions opts;
      opts.stages = stages;
      opts.force = force;
      opts.log = g.quiet ? nullptr : &std::cerr;
      pl::run_scheduled(config, opts, max_cycles);
      return 0;
    }
    if (serve->parsed()) {
      fs::path path = db;
      if (path.empty()) path = load_config(g).store;
      if (!fs::exists(path)) {
        throw pl::ConfigError("database not found: " + path.string());
      }
      crashbench::dashboard::Store store(path);
      crashbench::dashboard::DashboardServer server(store);
      std::cerr << "dashboard API on http://" << host << ":" << port << "\n";
      server.run(host, port);
      return 0;
    }
    if (backend->parsed()) {
      crashbench::exec::Simulator sim(crashbench::exec::directory_tree_resolver(trees));
      for (auto& s : crashbench::exec::load_scenarios(scenarios)) {
        sim.add_scenario(std::move(s));
      }
      // Block before the server spawns threads so sigwait sees the signal.
      sigset_t set;
      sigemptyset(&set);
      sigaddset(&set, SIGINT);
      sigaddset(&set, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &set, nullptr);
      crashbench::exec::BackendServer server(sim);
      server.start(host, backend_port);
      std::cerr << "execution backend on " << server.base_url() << std::endl;
      int sig = 0;
      sigwait(&set, &sig);
      server.stop();
      return 0;
    }
  } catch (const pl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const pl::StageFailed& e) {
    std::cerr << "stage failed: " << e.what() << "\n";
    return kExitStage;
  } catch (const crashbench::Error& e) {
    std::cerr << e.code() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
