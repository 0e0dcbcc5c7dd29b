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

// In-sandbox helper that submits the agent's working-tree diff to the crash
// resolution feedback gateway and prints the verdict for the agent.

#include <fcntl.h>
#include <unistd.h>

#include <cstdlib>
#include <iostream>
#include <string>

#include "crashbench/analysis.hpp"
#include "crashbench/crf.hpp"
#include "crashbench/error.hpp"
#include "crashbench/invoker.hpp"
#include "crashbench/patch.hpp"
#include "json.hpp"

namespace {

std::string require_env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') {
    throw crashbench::Error("SandboxError", std::string(name) + " is not set");
  }
  return v;
}

// One write(2) per line so concurrent appends never interleave.
void append_event(const std::string& path, const nlohmann::json& event) {
  const std::string line = event.dump() + "\n";
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC,
                        0644);
  if (fd < 0) return;
  [[maybe_unused]] const auto n = ::write(fd, line.data(), line.size());
  ::close(fd);
}

}  // namespace

int main(int argc, char** argv) {
  using namespace crashbench;
  if (argc > 1 && (std::string(argv[1]) == "-h" || std::string(argv[1]) == "--help")) {
    std::cout << "usage: run_kernel\n"
                 "Builds the current workspace, boots it and runs the crash\n"
                 "reproducer. Prints CRASH_RESOLVED, CRASH_REPRODUCED or\n"
                 "COMPILE_ERROR followed by details.\n";
    return 0;
  }
  try {
    const std::string workspace = require_env("CRASHBENCH_WORKSPACE");
    const std::string baseline = require_env("CRASHBENCH_BASELINE");
    crf::CRFRequest req;
    req.bug_id = require_env("CRASHBENCH_BUG_ID");
    req.attempt = require_env("CRASHBENCH_ATTEMPT");
    req.workspace_diff =
        patch::diff_trees(patch::read_tree(baseline), patch::read_tree(workspace));
    const auto verdict = crf::call_gateway(require_env("CRASHBENCH_GATEWAY"), req);
    if (const char* traj = std::getenv("CRASHBENCH_TRAJECTORY")) {
      append_event(traj, {{"kind", env::kCrfEvent},
                          {"payload",
                           {{"verdict", crf::header(verdict.kind)},
                            {"cost", verdict.cost},
                            {"latency_ms", verdict.latency_ms}}}});
    }
    std::cout << crf::format_tool_output(verdict);
    return 0;
  } catch (const Error& e) {
    std::cerr << nlohmann::json{{"error", e.code()}, {"message", e.what()}}.dump()
              << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", "InternalError"}, {"message", e.what()}}
                     .dump()
              << "\n";
    return 1;
  }
}
