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

#ifndef CRASHBENCH_ENV_HPP_
#define CRASHBENCH_ENV_HPP_

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "crashbench/corpus.hpp"
#include "crashbench/error.hpp"
#include "json.hpp"

namespace crashbench::env {

class MissingCrashReport : public Error {
 public:
  explicit MissingCrashReport(const std::string& bug_id)
      : Error("MissingCrashReport", "bug " + bug_id + " has no crash report") {}
};

class PlaceholderUnresolved : public Error {
 public:
  explicit PlaceholderUnresolved(std::string name)
      : Error("PlaceholderUnresolved",
              "invocation template uses undeclared placeholder {" + name + "}"),
        name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

// Crash-context section headings, in the order they appear.
inline constexpr const char* kReportHeading = "## Crash report";
inline constexpr const char* kReproducerHeading = "## Reproducer";
inline constexpr const char* kToolHeading = "## Crash resolution feedback";
inline constexpr const char* kOracleHeading = "## Files changed by the developer fix";

struct CrfTool {
  bool enabled = true;
  std::string install_path = "bin/run_kernel";  // relative to the sandbox
  std::string gateway_endpoint;

  friend bool operator==(const CrfTool&, const CrfTool&) = default;
};

struct BaseSpecOptions {
  CrfTool crf_tool;
  // Oracle mode hands the agent the developer's modified-file set.
  bool oracle_mode = false;
  std::vector<std::string> oracle_files;
  // Reproducer body to inline next to its reference, when available.
  std::optional<std::string> reproducer_text;
};

struct BaseEnvironmentSpec {
  std::string bug_id;
  std::string crash_context;
  std::string source_ref;
  std::string config_ref;
  CrfTool crf_tool;
  std::string cache_key;

  nlohmann::json to_json() const;
  friend bool operator==(const BaseEnvironmentSpec&,
                         const BaseEnvironmentSpec&) = default;
};

std::string render_crash_context(const corpus::BugRecord& bug,
                                 const BaseSpecOptions& options);

// Throws MissingCrashReport, or InvalidField when the bug is not curated.
BaseEnvironmentSpec build_base_spec(const corpus::BugRecord& bug,
                                    const BaseSpecOptions& options = {});

// Memoizes base specs by cache_key; safe for concurrent use.
class BaseSpecCache {
 public:
  BaseEnvironmentSpec get(const corpus::BugRecord& bug,
                          const BaseSpecOptions& options = {});
  long hits() const;
  long size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, BaseEnvironmentSpec> specs_;
  long hits_ = 0;
};

struct AgentOverlay {
  std::string name;
  std::vector<std::string> install_steps;
  std::string invocation_template;
  std::map<std::string, std::string> env_vars;

  static AgentOverlay from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  friend bool operator==(const AgentOverlay&, const AgentOverlay&) = default;
};

AgentOverlay load_overlay(const std::filesystem::path& path);

// Placeholder names ({name}) referenced by an invocation template.
std::vector<std::string> template_placeholders(std::string_view tmpl);

struct Layer {
  std::string name;
  std::vector<std::string> steps;

  friend bool operator==(const Layer&, const Layer&) = default;
};

struct EnvironmentSpec {
  BaseEnvironmentSpec base;
  AgentOverlay overlay;
  std::vector<Layer> layers;  // base layer first, then the overlay
  std::string digest;

  std::string serialize() const;  // canonical JSON
};

// Throws PlaceholderUnresolved.
EnvironmentSpec compose(const BaseEnvironmentSpec& base,
                        const AgentOverlay& overlay);

// Substitutes {crash_context}, {workspace} and env-var placeholders. Values
// are single-quoted for the shell, so templates must not quote them again.
std::string render_invocation(const AgentOverlay& overlay,
                              const std::string& crash_context_path,
                              const std::string& workspace_path);

}  // namespace crashbench::env

#endif  // CRASHBENCH_ENV_HPP_
