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

#include "crashbench/invoker.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <thread>

#include "crashbench/analysis.hpp"
#include "crashbench/fs.hpp"
#include "crashbench/patch.hpp"

extern char** environ;

namespace crashbench::env {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

class TrajectoryReader {
 public:
  explicit TrajectoryReader(fs::path path) : path_(std::move(path)) {}

  // Consumes complete lines appended since the last call.
  void poll(double now) {
    auto content = read_file(path_);
    if (!content || content->size() <= offset_) return;
    const std::size_t end = content->rfind('\n');
    if (end == std::string::npos || end < offset_) return;
    std::string_view fresh(content->data() + offset_, end + 1 - offset_);
    offset_ = end + 1;
    add_lines(fresh, now);
  }

  void add_lines(std::string_view text, double now) {
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t nl = text.find('\n', pos);
      if (nl == std::string_view::npos) nl = text.size();
      std::string_view line = text.substr(pos, nl - pos);
      pos = nl + 1;
      if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
      add(line, now);
    }
  }

  const std::vector<TrajectoryEvent>& events() const { return events_; }
  double cost() const { return cost_; }
  long steps() const { return steps_; }

 private:
  void add(std::string_view line, double now) {
    TrajectoryEvent e;
    double t = now;
    try {
      const json j = json::parse(line);
      e.kind = j.at("kind").get<std::string>();
      e.payload = j.value("payload", json::object());
      if (j.contains("t") && j.at("t").is_number()) t = j.at("t").get<double>();
    } catch (const json::exception&) {
      e.kind = "invalid";
      e.payload = {{"line", std::string(line)}};
    }
    e.t = std::max(t, last_t_);
    last_t_ = e.t;
    if (e.kind == kCostEvent && e.payload.is_object()) {
      const auto usd = e.payload.find("usd");
      if (usd != e.payload.end() && usd->is_number()) {
        cost_ += std::max(0.0, usd->get<double>());
      }
    } else if (e.kind == kStepEvent) {
      ++steps_;
    }
    events_.push_back(std::move(e));
  }

  fs::path path_;
  std::size_t offset_ = 0;
  double last_t_ = 0.0;
  double cost_ = 0.0;
  long steps_ = 0;
  std::vector<TrajectoryEvent> events_;
};

fs::path unique_sandbox(const fs::path& root, const std::string& stem) {
  static std::atomic<unsigned long> counter{0};
  return root / (stem + "." + std::to_string(::getpid()) + "." +
                 std::to_string(counter++));
}

struct ChildSpec {
  std::vector<std::string> argv;
  std::vector<std::string> envp;
  fs::path cwd;
  fs::path log;
};

pid_t spawn(const ChildSpec& spec) {
  std::vector<char*> argv;
  for (const auto& a : spec.argv) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  std::vector<char*> envp;
  for (const auto& e : spec.envp) envp.push_back(const_cast<char*>(e.c_str()));
  envp.push_back(nullptr);

  const int log_fd =
      ::open(spec.log.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (log_fd < 0) throw SandboxError("cannot open " + spec.log.string());
  const int null_fd = ::open("/dev/null", O_RDONLY | O_CLOEXEC);
  const std::string cwd = spec.cwd.string();

  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(log_fd);
    if (null_fd >= 0) ::close(null_fd);
    throw SandboxError(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    if (::chdir(cwd.c_str()) != 0) ::_exit(126);
    if (null_fd >= 0) ::dup2(null_fd, 0);
    ::dup2(log_fd, 1);
    ::dup2(log_fd, 2);
    ::execve(argv[0], argv.data(), envp.data());
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(log_fd);
  if (null_fd >= 0) ::close(null_fd);
  return pid;
}

void kill_group(pid_t pid) { ::kill(-pid, SIGKILL); }

int wait_blocking(pid_t pid) {
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  return status;
}

void make_writable(const fs::path& root) {
  std::error_code ec;
  if (!fs::exists(root, ec)) return;
  fs::permissions(root, fs::perms::owner_all, fs::perm_options::add, ec);
  for (auto it = fs::recursive_directory_iterator(root, ec);
       it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (!it->is_symlink()) {
      fs::permissions(it->path(), fs::perms::owner_all, fs::perm_options::add,
                      ec);
    }
  }
}

void make_read_only(const fs::path& root) {
  std::error_code ec;
  const auto strip = fs::perms::owner_write | fs::perms::group_write |
                     fs::perms::others_write;
  for (auto it = fs::recursive_directory_iterator(root, ec);
       it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (!it->is_symlink()) {
      fs::permissions(it->path(), strip, fs::perm_options::remove, ec);
    }
  }
  fs::permissions(root, strip, fs::perm_options::remove, ec);
}

std::string inherited_path() {
  const char* p = std::getenv("PATH");
  return p ? p : "/usr/local/bin:/usr/bin:/bin";
}

}  // namespace

std::string to_string(ExitStatus s) {
  switch (s) {
    case ExitStatus::kCompleted:
      return "completed";
    case ExitStatus::kTimeout:
      return "timeout";
    case ExitStatus::kBudgetExceeded:
      return "budget_exceeded";
    case ExitStatus::kCrashed:
      return "crashed";
  }
  return "crashed";
}

ExitStatus exit_status_from_string(const std::string& s) {
  if (s == "completed") return ExitStatus::kCompleted;
  if (s == "timeout") return ExitStatus::kTimeout;
  if (s == "budget_exceeded") return ExitStatus::kBudgetExceeded;
  if (s == "crashed") return ExitStatus::kCrashed;
  throw InvalidField("exit_status", "unknown value '" + s + "'");
}

long AgentRunArtifact::crf_calls() const {
  return long(std::count_if(trajectory.begin(), trajectory.end(),
                            [](const TrajectoryEvent& e) {
                              return e.kind == kCrfEvent;
                            }));
}

void to_json(json& j, const TrajectoryEvent& v) {
  j = {{"t", v.t}, {"kind", v.kind}, {"payload", v.payload}};
}

void from_json(const json& j, TrajectoryEvent& v) {
  v.t = j.value("t", 0.0);
  v.kind = j.at("kind").get<std::string>();
  v.payload = j.value("payload", json::object());
}

void to_json(json& j, const AgentRunArtifact& v) {
  j = {{"bug_id", v.bug_id},
       {"agent_name", v.agent_name},
       {"attempt_index", v.attempt_index},
       {"patch", v.patch},
       {"dollar_cost", v.dollar_cost},
       {"wall_time_seconds", v.wall_time_seconds},
       {"trajectory", v.trajectory},
       {"exit_status", to_string(v.exit_status)},
       {"exit_code", v.exit_code ? json(*v.exit_code) : json(nullptr)},
       {"limit_hit", v.limit_hit}};
}

void from_json(const json& j, AgentRunArtifact& v) {
  v.bug_id = j.at("bug_id").get<std::string>();
  v.agent_name = j.at("agent_name").get<std::string>();
  v.attempt_index = j.at("attempt_index").get<int>();
  v.patch = j.value("patch", "");
  v.dollar_cost = j.value("dollar_cost", 0.0);
  v.wall_time_seconds = j.value("wall_time_seconds", 0.0);
  v.trajectory = j.value("trajectory", std::vector<TrajectoryEvent>{});
  v.exit_status = exit_status_from_string(j.at("exit_status").get<std::string>());
  v.exit_code.reset();
  if (j.contains("exit_code") && !j.at("exit_code").is_null()) {
    v.exit_code = j.at("exit_code").get<int>();
  }
  v.limit_hit = j.value("limit_hit", "");
}

std::vector<TrajectoryEvent> parse_trajectory(std::string_view jsonl) {
  TrajectoryReader reader("");
  reader.add_lines(jsonl, 0.0);
  return reader.events();
}

AgentRunArtifact invoke_agent(const EnvironmentSpec& spec, const Limits& limits,
                              int attempt_index, const InvokerConfig& config) {
  if (attempt_index < 1) throw InvalidField("attempt_index", "must be >= 1");
  const BaseEnvironmentSpec& base = spec.base;

  const fs::path source = config.trees_root / base.source_ref;
  if (base.source_ref.empty() || !fs::is_directory(source)) {
    throw WorkspaceInitFailed("source tree not found: " + source.string());
  }
  const fs::path box = unique_sandbox(
      config.sandbox_root, base.bug_id + "-" + spec.overlay.name + "-" +
                               std::to_string(attempt_index));
  const fs::path workspace = box / "workspace";
  const fs::path baseline = box / "baseline";
  const fs::path bin = box / "bin";
  const fs::path home = box / "home";
  const fs::path context = box / "crash_context.md";
  const fs::path trajectory = box / "trajectory.jsonl";

  struct Cleanup {
    fs::path dir;
    bool keep;
    ~Cleanup() {
      if (keep) return;
      make_writable(dir);
      std::error_code ec;
      fs::remove_all(dir, ec);
    }
  } cleanup{box, config.keep_sandbox};

  patch::FileMap snapshot;
  try {
    fs::create_directories(box);
    fs::copy(source, workspace, fs::copy_options::recursive);
    fs::copy(source, baseline, fs::copy_options::recursive);
    snapshot = patch::read_tree(workspace);
  } catch (const fs::filesystem_error& e) {
    throw WorkspaceInitFailed(e.what());
  }
  make_read_only(baseline);

  try {
    fs::create_directories(bin);
    fs::create_directories(home);
    write_file_atomic(context, base.crash_context);
    write_file_atomic(trajectory, "");
    if (base.crf_tool.enabled) {
      if (!fs::exists(config.run_kernel_binary)) {
        throw SandboxError("run_kernel binary missing: " +
                           config.run_kernel_binary.string());
      }
      fs::create_symlink(fs::absolute(config.run_kernel_binary),
                         box / base.crf_tool.install_path);
    }
  } catch (const fs::filesystem_error& e) {
    throw SandboxError(e.what());
  }

  ChildSpec child;
  child.cwd = workspace;
  child.log = box / "agent.log";
  child.envp = {
      "PATH=" + bin.string() + ":" + inherited_path(),
      "HOME=" + home.string(),
      "CRASHBENCH_BUG_ID=" + base.bug_id,
      "CRASHBENCH_ATTEMPT=" + std::to_string(attempt_index),
      "CRASHBENCH_GATEWAY=" + config.gateway_url,
      "CRASHBENCH_WORKSPACE=" + workspace.string(),
      "CRASHBENCH_BASELINE=" + baseline.string(),
      "CRASHBENCH_TRAJECTORY=" + trajectory.string(),
      "CRASHBENCH_CRASH_CONTEXT=" + context.string(),
  };
  for (const auto& [k, v] : spec.overlay.env_vars) child.envp.push_back(k + "=" + v);

  for (const auto& step : spec.overlay.install_steps) {
    ChildSpec install = child;
    install.cwd = box;
    install.argv = {"/bin/sh", "-c", step};
    const int status = wait_blocking(spawn(install));
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      throw SandboxError("install step failed: " + step);
    }
  }

  child.argv = {"/bin/sh", "-c",
                render_invocation(spec.overlay, context.string(),
                                  workspace.string()),
                "crashbench-agent", context.string(), workspace.string()};

  AgentRunArtifact art;
  art.bug_id = base.bug_id;
  art.agent_name = spec.overlay.name;
  art.attempt_index = attempt_index;

  TrajectoryReader reader(trajectory);
  const auto start = Clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(Clock::now() - start).count();
  };
  const pid_t pid = spawn(child);

  int status = 0;
  bool exited = false;
  for (;;) {
    const pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) {
      exited = true;
      break;
    }
    if (r < 0 && errno != EINTR) {
      kill_group(pid);
      throw SandboxError(std::string("waitpid: ") + std::strerror(errno));
    }
    reader.poll(elapsed());
    if (limits.budget_usd && reader.cost() > *limits.budget_usd) {
      art.exit_status = ExitStatus::kBudgetExceeded;
      art.limit_hit = "budget";
      break;
    }
    if (limits.step_limit && reader.steps() > *limits.step_limit) {
      art.exit_status = ExitStatus::kBudgetExceeded;
      art.limit_hit = "steps";
      break;
    }
    if (limits.time_limit_seconds && elapsed() > *limits.time_limit_seconds) {
      art.exit_status = ExitStatus::kTimeout;
      art.limit_hit = "time";
      break;
    }
    std::this_thread::sleep_for(config.poll_interval);
  }
  kill_group(pid);
  if (!exited) status = wait_blocking(pid);
  art.wall_time_seconds = elapsed();
  reader.poll(art.wall_time_seconds);

  if (art.limit_hit.empty()) {
    if (WIFEXITED(status)) art.exit_code = WEXITSTATUS(status);
    if (limits.budget_usd && reader.cost() > *limits.budget_usd) {
      art.exit_status = ExitStatus::kBudgetExceeded;
      art.limit_hit = "budget";
    } else if (limits.step_limit && reader.steps() > *limits.step_limit) {
      art.exit_status = ExitStatus::kBudgetExceeded;
      art.limit_hit = "steps";
    } else if (art.exit_code == 0) {
      art.exit_status = ExitStatus::kCompleted;
    } else {
      art.exit_status = ExitStatus::kCrashed;
    }
  }
  art.dollar_cost = reader.cost();
  art.trajectory = reader.events();

  try {
    art.patch = patch::diff_trees(snapshot, patch::read_tree(workspace));
  } catch (const std::exception& e) {
    throw SandboxError(std::string("cannot capture workspace edits: ") +
                       e.what());
  }
  return art;
}

}  // namespace crashbench::env
