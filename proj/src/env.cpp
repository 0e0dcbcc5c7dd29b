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

#include "crashbench/env.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "crashbench/digest.hpp"

namespace crashbench::env {
namespace {

using nlohmann::json;

constexpr const char* kToolInstructions =
    "Run `run_kernel` from anywhere inside the workspace to test your current\n"
    "edits. It builds the kernel with your changes, boots it, and runs the\n"
    "reproducer. The first line of its output is exactly one of:\n"
    "\n"
    "  CRASH_RESOLVED    the reproducer no longer crashes the kernel\n"
    "  CRASH_REPRODUCED  the kernel still crashes; the new report follows\n"
    "  COMPILE_ERROR     the kernel does not build; the compiler log follows\n"
    "\n"
    "Each call takes minutes and is billed, so use it deliberately.\n";

constexpr const char* kNoToolText =
    "No feedback tool is available in this environment. Submit your best\n"
    "patch by leaving the edits in the workspace.\n";

bool is_ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_';
}

std::string shell_quote(const std::string& v) {
  std::string out = "'";
  for (char c : v) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

std::set<std::string> declared_placeholders(const AgentOverlay& overlay) {
  std::set<std::string> out = {"crash_context", "workspace"};
  for (const auto& [k, v] : overlay.env_vars) out.insert(k);
  return out;
}

json crf_json(const CrfTool& t) {
  return {{"enabled", t.enabled},
          {"install_path", t.install_path},
          {"gateway_endpoint", t.gateway_endpoint}};
}

}  // namespace

json BaseEnvironmentSpec::to_json() const {
  return {{"bug_id", bug_id},
          {"crash_context", crash_context},
          {"source_ref", source_ref},
          {"config_ref", config_ref},
          {"crf_tool", crf_json(crf_tool)},
          {"cache_key", cache_key}};
}

std::string render_crash_context(const corpus::BugRecord& bug,
                                 const BaseSpecOptions& options) {
  std::ostringstream out;
  out << "# " << (bug.title.empty() ? bug.bug_id : bug.title) << "\n\n";
  out << kReportHeading << "\n\n```\n" << bug.crash_report;
  if (!bug.crash_report.empty() && bug.crash_report.back() != '\n') out << "\n";
  out << "```\n\n";

  out << kReproducerHeading << "\n\n";
  out << "Reference: " << bug.reproducer << "\n";
  out << "The reproducer runs automatically on every `run_kernel` call and in "
         "final evaluation.\n";
  if (options.reproducer_text) {
    out << "\n```\n" << *options.reproducer_text;
    if (!options.reproducer_text->empty() &&
        options.reproducer_text->back() != '\n') {
      out << "\n";
    }
    out << "```\n";
  }
  out << "\n";

  out << kToolHeading << "\n\n"
      << (options.crf_tool.enabled ? kToolInstructions : kNoToolText);

  if (options.oracle_mode) {
    out << "\n" << kOracleHeading << "\n\n";
    for (const auto& f : options.oracle_files) out << "- " << f << "\n";
  }
  return out.str();
}

BaseEnvironmentSpec build_base_spec(const corpus::BugRecord& bug,
                                    const BaseSpecOptions& options) {
  if (bug.crash_report.empty()) throw MissingCrashReport(bug.bug_id);
  if (!bug.curated()) {
    throw InvalidField("bug", bug.bug_id + " has not passed curation");
  }
  BaseEnvironmentSpec spec;
  spec.bug_id = bug.bug_id;
  spec.crash_context = render_crash_context(bug, options);
  spec.source_ref = bug.kernel_commit;
  spec.config_ref = bug.kernel_config;
  spec.crf_tool = options.crf_tool;
  const json key = {{"bug_id", spec.bug_id},
                    {"source_ref", spec.source_ref},
                    {"crash_context", spec.crash_context},
                    {"crf_tool", crf_json(spec.crf_tool)}};
  spec.cache_key = sha256_hex(key.dump());
  return spec;
}

BaseEnvironmentSpec BaseSpecCache::get(const corpus::BugRecord& bug,
                                       const BaseSpecOptions& options) {
  BaseEnvironmentSpec spec = build_base_spec(bug, options);
  std::lock_guard<std::mutex> lock(mu_);
  auto [it, inserted] = specs_.emplace(spec.cache_key, spec);
  if (!inserted) ++hits_;
  return it->second;
}

long BaseSpecCache::hits() const {
  std::lock_guard<std::mutex> lock(mu_);
  return hits_;
}

long BaseSpecCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return long(specs_.size());
}

AgentOverlay AgentOverlay::from_json(const json& j) {
  AgentOverlay o;
  if (!j.contains("name")) throw MissingField("name");
  if (!j.contains("invocation_template")) {
    throw MissingField("invocation_template");
  }
  o.name = j.at("name").get<std::string>();
  if (o.name.empty() || !corpus::valid_bug_id(o.name)) {
    throw InvalidField("name", "must match [A-Za-z0-9._-]+");
  }
  o.invocation_template = j.at("invocation_template").get<std::string>();
  o.install_steps =
      j.value("install_steps", std::vector<std::string>{});
  o.env_vars = j.value("env_vars", std::map<std::string, std::string>{});
  for (const auto& [k, v] : o.env_vars) {
    if (k.empty() || !std::all_of(k.begin(), k.end(), is_ident_char)) {
      throw InvalidField("env_vars", "bad variable name '" + k + "'");
    }
  }
  return o;
}

json AgentOverlay::to_json() const {
  return {{"name", name},
          {"install_steps", install_steps},
          {"invocation_template", invocation_template},
          {"env_vars", env_vars}};
}

AgentOverlay load_overlay(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("IoError", "cannot read overlay " + path.string());
  return AgentOverlay::from_json(json::parse(in));
}

std::vector<std::string> template_placeholders(std::string_view tmpl) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] != '{') continue;
    std::size_t j = i + 1;
    while (j < tmpl.size() && is_ident_char(tmpl[j])) ++j;
    if (j > i + 1 && j < tmpl.size() && tmpl[j] == '}') {
      out.emplace_back(tmpl.substr(i + 1, j - i - 1));
      i = j;
    }
  }
  return out;
}

std::string EnvironmentSpec::serialize() const {
  json layers_json = json::array();
  for (const auto& l : layers) {
    layers_json.push_back({{"name", l.name}, {"steps", l.steps}});
  }
  return json{{"base", base.to_json()},
              {"overlay", overlay.to_json()},
              {"layers", layers_json}}
      .dump();
}

EnvironmentSpec compose(const BaseEnvironmentSpec& base,
                        const AgentOverlay& overlay) {
  const auto declared = declared_placeholders(overlay);
  for (const auto& p : template_placeholders(overlay.invocation_template)) {
    if (!declared.count(p)) throw PlaceholderUnresolved(p);
  }
  EnvironmentSpec spec;
  spec.base = base;
  spec.overlay = overlay;

  Layer base_layer{"base:" + base.cache_key.substr(0, 12), {}};
  base_layer.steps.push_back("checkout " + base.source_ref);
  if (!base.config_ref.empty()) {
    base_layer.steps.push_back("configure " + base.config_ref);
  }
  base_layer.steps.push_back("write crash_context.md");
  if (base.crf_tool.enabled) {
    base_layer.steps.push_back("install run_kernel at " +
                               base.crf_tool.install_path);
  }
  spec.layers.push_back(std::move(base_layer));
  spec.layers.push_back(Layer{"overlay:" + overlay.name, overlay.install_steps});
  spec.digest = sha256_hex(spec.serialize());
  return spec;
}

std::string render_invocation(const AgentOverlay& overlay,
                              const std::string& crash_context_path,
                              const std::string& workspace_path) {
  std::map<std::string, std::string> values = overlay.env_vars;
  values["crash_context"] = crash_context_path;
  values["workspace"] = workspace_path;
  const std::string& t = overlay.invocation_template;
  std::string out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == '{') {
      std::size_t j = i + 1;
      while (j < t.size() && is_ident_char(t[j])) ++j;
      if (j > i + 1 && j < t.size() && t[j] == '}') {
        const std::string name = t.substr(i + 1, j - i - 1);
        auto it = values.find(name);
        if (it == values.end()) throw PlaceholderUnresolved(name);
        out += shell_quote(it->second);
        i = j;
        continue;
      }
    }
    out += t[i];
  }
  return out;
}

}  // namespace crashbench::env
