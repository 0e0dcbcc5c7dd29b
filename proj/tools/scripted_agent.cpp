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

// Deterministic stand-in for an LLM agent. It edits the workspace according
// to a plan file and emits trajectory events like a real scaffold would.
//
// Plan file: {"<bug_id>": "<unified diff>", ...}

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "crashbench/analysis.hpp"
#include "crashbench/fs.hpp"
#include "crashbench/invoker.hpp"
#include "crashbench/patch.hpp"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string trajectory_path() {
  const char* p = std::getenv("CRASHBENCH_TRAJECTORY");
  return p ? p : "";
}

void emit(const std::string& kind, const json& payload) {
  const std::string path = trajectory_path();
  if (path.empty()) return;
  const std::string line = json{{"kind", kind}, {"payload", payload}}.dump() + "\n";
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC,
                        0644);
  if (fd < 0) return;
  [[maybe_unused]] const auto n = ::write(fd, line.data(), line.size());
  ::close(fd);
}

void write_tree(const fs::path& root, const crashbench::patch::FileMap& before,
                const crashbench::patch::FileMap& after) {
  for (const auto& [path, _] : before) {
    if (!after.count(path)) fs::remove(root / path);
  }
  for (const auto& [path, content] : after) {
    auto it = before.find(path);
    if (it == before.end() || it->second != content) {
      crashbench::write_file_atomic(root / path, content);
    }
  }
}

// First file the plan's patch touches, else the first C file in the tree.
std::string target_file(const crashbench::patch::FileMap& files,
                        const std::string& planned) {
  if (!planned.empty()) {
    const auto p = crashbench::patch::parse_unified_diff(planned);
    for (const auto& d : p.files) {
      if (files.count(d.path())) return d.path();
    }
  }
  for (const auto& [path, _] : files) {
    if (path.size() > 2 && path.substr(path.size() - 2) == ".c") return path;
  }
  return files.empty() ? "" : files.begin()->first;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scripted test agent"};
  std::string plan_path, mode = "fix", workspace;
  double cost = 0.0;
  int steps = 1;
  bool use_tool = false;
  double sleep_seconds = 0.0;
  app.add_option("--plan", plan_path, "JSON map of bug id to patch");
  app.add_option("--mode", mode, "fix, noop or uncompilable")
      ->check(CLI::IsMember({"fix", "noop", "uncompilable"}));
  app.add_option("--cost", cost, "dollar cost per step");
  app.add_option("--steps", steps, "number of steps to report");
  app.add_flag("--use-tool", use_tool, "call run_kernel after editing");
  app.add_option("--sleep", sleep_seconds, "seconds to wait before editing");
  std::string context_file;
  app.add_option("context_file", context_file, "crash context file")->required();
  app.add_option("workspace", workspace, "workspace directory")->required();
  CLI11_PARSE(app, argc, argv);

  try {
    const char* bug_env = std::getenv("CRASHBENCH_BUG_ID");
    const std::string bug = bug_env ? bug_env : "";
    std::string planned;
    if (!plan_path.empty()) {
      const auto body = crashbench::read_file(plan_path);
      if (!body) throw std::runtime_error("cannot read plan " + plan_path);
      const json plan = json::parse(*body);
      planned = plan.value(bug, "");
    }
    if (!fs::exists(context_file)) {
      throw std::runtime_error("crash context missing: " + context_file);
    }
    for (int i = 0; i < steps; ++i) {
      emit(crashbench::env::kStepEvent, {{"index", i}});
      if (cost > 0) emit(crashbench::env::kCostEvent, {{"usd", cost}});
    }
    if (sleep_seconds > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(sleep_seconds));
    }

    const auto before = crashbench::patch::read_tree(workspace);
    auto after = before;
    if (mode == "fix" && !planned.empty()) {
      after = crashbench::patch::apply_patch(
          before, crashbench::patch::parse_unified_diff(planned));
    } else if (mode == "uncompilable") {
      const std::string f = target_file(before, planned);
      if (!f.empty()) after[f] = "#error crashbench agent broke the build\n" + after[f];
    }
    write_tree(workspace, before, after);

    if (use_tool) {
      const int rc = std::system("run_kernel");
      if (rc != 0) std::cerr << "run_kernel exited with " << rc << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "scripted_agent: " << e.what() << "\n";
    return 1;
  }
}
