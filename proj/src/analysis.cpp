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

#include "crashbench/analysis.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

namespace crashbench::patch {
namespace {

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Identifiers that may precede '(' in a declaration without naming it.
bool is_decorator(std::string_view id) {
  static constexpr std::array<std::string_view, 22> kNames = {
      "__attribute__", "__attribute", "__declspec",  "__aligned",
      "__section",     "alignas",     "_Alignas",    "__typeof__",
      "__typeof",      "typeof",      "sizeof",      "__printf",
      "__scanf",       "__must_hold", "__acquires",  "__releases",
      "__cond_acquires", "__cond_releases", "__diag_ignore", "__nocfi",
      "if",            "while",
  };
  return std::find(kNames.begin(), kNames.end(), id) != kNames.end();
}

struct Blanked {
  std::string code;
  bool ok = true;
  std::string problem;
};

// Replaces comments, literals and preprocessor lines with spaces, keeping
// newlines so that offsets map to the same line numbers. A directive's '#'
// becomes ';' so that it terminates the declaration in front of it.
Blanked blank_source(std::string_view src) {
  enum class State { kCode, kLineComment, kBlockComment, kString, kChar };
  Blanked out;
  out.code.assign(src.begin(), src.end());
  State state = State::kCode;
  bool in_directive = false;
  bool line_start = true;
  long line = 1;
  long literal_line = 0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const char c = src[i];
    const char next = i + 1 < src.size() ? src[i + 1] : '\0';
    if (c == '\n') {
      ++line;
      if (state == State::kLineComment) state = State::kCode;
      if (state == State::kString || state == State::kChar) {
        out.ok = false;
        out.problem = "unterminated literal at line " +
                      std::to_string(literal_line);
        state = State::kCode;
      }
      const bool continued = i > 0 && src[i - 1] == '\\';
      if (in_directive && !continued && state == State::kCode) {
        in_directive = false;
      }
      line_start = !in_directive;
      continue;
    }
    switch (state) {
      case State::kCode:
        if (c == '/' && next == '/') {
          state = State::kLineComment;
          out.code[i] = ' ';
          break;
        }
        if (c == '/' && next == '*') {
          state = State::kBlockComment;
          out.code[i] = ' ';
          out.code[i + 1] = ' ';
          ++i;
          break;
        }
        if (line_start && c == '#') {
          in_directive = true;
          line_start = false;
          out.code[i] = ';';
          break;
        }
        if (!std::isspace(static_cast<unsigned char>(c))) line_start = false;
        if (c == '"') {
          state = State::kString;
          literal_line = line;
          out.code[i] = ' ';
          break;
        }
        if (c == '\'') {
          state = State::kChar;
          literal_line = line;
          out.code[i] = ' ';
          break;
        }
        if (in_directive) out.code[i] = ' ';
        break;
      case State::kLineComment:
        out.code[i] = ' ';
        break;
      case State::kBlockComment:
        out.code[i] = ' ';
        if (c == '*' && next == '/') {
          out.code[i + 1] = ' ';
          ++i;
          state = State::kCode;
        }
        break;
      case State::kString:
      case State::kChar:
        out.code[i] = ' ';
        if (c == '\\' && next != '\0' && next != '\n') {
          out.code[i + 1] = ' ';
          ++i;
        } else if ((state == State::kString && c == '"') ||
                   (state == State::kChar && c == '\'')) {
          state = State::kCode;
        }
        break;
    }
  }
  if (state == State::kBlockComment) {
    out.ok = false;
    out.problem = "unterminated block comment";
  } else if (state == State::kString || state == State::kChar) {
    out.ok = false;
    out.problem =
        "unterminated literal at line " + std::to_string(literal_line);
  }
  return out;
}

std::optional<std::string> declared_function(std::string_view decl) {
  int paren = 0;
  for (char c : decl) {
    if (c == '(') ++paren;
    if (c == ')') --paren;
    if (c == '=' && paren == 0) return std::nullopt;
  }
  std::size_t i = 0;
  while (i < decl.size()) {
    if (!is_ident_start(decl[i]) || (i > 0 && is_ident_char(decl[i - 1]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < decl.size() && is_ident_char(decl[j])) ++j;
    const std::string_view id = decl.substr(i, j - i);
    std::size_t k = j;
    while (k < decl.size() &&
           std::isspace(static_cast<unsigned char>(decl[k]))) {
      ++k;
    }
    if (k < decl.size() && decl[k] == '(' && !is_decorator(id)) {
      return std::string(id);
    }
    i = j;
  }
  return std::nullopt;
}

long first_line_of(const Hunk& h, bool old_side) {
  const long start = old_side ? h.old_start : h.new_start;
  const long len = old_side ? h.old_len : h.new_len;
  return len > 0 ? start : start + 1;
}

std::string qualified(const std::string& path, std::string_view fn) {
  return path + "::" + std::string(fn);
}

std::string span_owner(const SpanScan& scan, long line) {
  for (const FunctionSpan& f : scan.functions) {
    if (f.first_line <= line && line <= f.last_line) return f.name;
  }
  return std::string(kTopLevel);
}

bool has_changes(const Hunk& h) {
  return std::any_of(h.lines.begin(), h.lines.end(), [](const HunkLine& l) {
    return l.kind != LineKind::kContext;
  });
}

void fallback_from_sections(const FileDelta& d, const std::string& path,
                            DiffAnalysis& out) {
  for (const Hunk& h : d.hunks) {
    if (!has_changes(h)) continue;
    const auto fn = function_from_section(h.section);
    out.modified_functions.insert(qualified(path, fn ? *fn : kTopLevel));
  }
}

// A deletion whose single hunk removes the whole file carries its content.
std::optional<std::string> reconstruct_deleted(const FileDelta& d) {
  if (d.hunks.size() != 1 || d.hunks[0].old_start != 1 ||
      d.hunks[0].new_len != 0) {
    return std::nullopt;
  }
  TextLines t;
  for (const HunkLine& l : d.hunks[0].lines) {
    t.lines.push_back(l.text);
    if (l.no_newline_at_eof) t.final_newline = false;
  }
  return join_lines(t);
}

}  // namespace

std::optional<std::string> DirectoryTree::read(const std::string& path) const {
  const std::filesystem::path full = root_ / path;
  std::error_code ec;
  if (!std::filesystem::is_regular_file(full, ec)) return std::nullopt;
  std::ifstream in(full, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::optional<std::string> MemoryTree::read(const std::string& path) const {
  auto it = files_.find(path);
  if (it == files_.end()) return std::nullopt;
  return it->second;
}

FileMap read_tree(const std::filesystem::path& root) {
  FileMap files;
  namespace fs = std::filesystem;
  for (auto it = fs::recursive_directory_iterator(root);
       it != fs::recursive_directory_iterator(); ++it) {
    if (it->is_directory() && it->path().filename() == ".git") {
      it.disable_recursion_pending();
      continue;
    }
    if (!it->is_regular_file()) continue;
    std::ifstream in(it->path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    files[fs::relative(it->path(), root).generic_string()] = ss.str();
  }
  return files;
}

void write_tree(const std::filesystem::path& root, const FileMap& files) {
  namespace fs = std::filesystem;
  for (const auto& [rel, content] : files) {
    const fs::path full = root / rel;
    fs::create_directories(full.parent_path());
    std::ofstream out(full, std::ios::binary | std::ios::trunc);
    out << content;
  }
}

SpanScan scan_function_spans(std::string_view source) {
  SpanScan scan;
  const Blanked blanked = blank_source(source);
  if (!blanked.ok) {
    scan.balanced = false;
    scan.problem = blanked.problem;
    return scan;
  }
  const std::string& code = blanked.code;
  int depth = 0;
  long line = 1;
  long decl_start = -1;
  long decl_line = 0;
  std::optional<std::string> current;
  long current_first = 0;
  for (std::size_t pos = 0; pos < code.size(); ++pos) {
    const char c = code[pos];
    if (c == '\n') {
      ++line;
      continue;
    }
    if (depth == 0) {
      if (std::isspace(static_cast<unsigned char>(c))) continue;
      if (c == ';') {
        decl_start = -1;
        continue;
      }
      if (c == '}') {
        scan.balanced = false;
        scan.problem = "unmatched '}' at line " + std::to_string(line);
        return scan;
      }
      if (decl_start < 0) {
        decl_start = long(pos);
        decl_line = line;
      }
      if (c == '{') {
        const std::string_view decl(code.data() + decl_start,
                                    pos - std::size_t(decl_start));
        current = declared_function(decl);
        current_first = decl_line;
        depth = 1;
      }
      continue;
    }
    if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) {
        if (current) {
          scan.functions.push_back({*current, current_first, line});
        }
        current.reset();
        decl_start = -1;
      }
    }
  }
  if (depth != 0) {
    scan.balanced = false;
    scan.problem = "unclosed '{' at end of file";
  }
  return scan;
}

bool is_c_like(std::string_view path) {
  const std::size_t dot = path.rfind('.');
  if (dot == std::string_view::npos) return false;
  const std::string_view ext = path.substr(dot);
  static constexpr std::array<std::string_view, 9> kExt = {
      ".c", ".h", ".cc", ".cpp", ".cxx", ".hpp", ".hh", ".hxx", ".inl"};
  return std::find(kExt.begin(), kExt.end(), ext) != kExt.end();
}

std::optional<std::string> function_from_section(std::string_view section) {
  return declared_function(section);
}

void to_json(nlohmann::json& j, const DiffAnalysis& a) {
  j = nlohmann::json{
      {"modified_files", std::vector<std::string>(a.modified_files.begin(),
                                                  a.modified_files.end())},
      {"modified_functions",
       std::vector<std::string>(a.modified_functions.begin(),
                                a.modified_functions.end())},
      {"warnings", a.warnings},
  };
}

void from_json(const nlohmann::json& j, DiffAnalysis& a) {
  a = DiffAnalysis{};
  for (const auto& f : j.at("modified_files")) {
    a.modified_files.insert(f.get<std::string>());
  }
  for (const auto& f : j.at("modified_functions")) {
    a.modified_functions.insert(f.get<std::string>());
  }
  if (j.contains("warnings")) {
    a.warnings = j.at("warnings").get<std::vector<std::string>>();
  }
}

std::string analysis_json(const DiffAnalysis& a) {
  return nlohmann::json(a).dump();
}

DiffAnalysis extract_modified_functions(const Patch& patch,
                                        const SourceTree& tree) {
  DiffAnalysis out;
  for (const FileDelta& d : patch.files) {
    if (d.is_mode_only()) continue;
    const std::string& path = d.path();
    out.modified_files.insert(path);
    if (d.binary) continue;
    const bool changed =
        std::any_of(d.hunks.begin(), d.hunks.end(), has_changes);
    if (!changed) continue;
    if (!is_c_like(path)) {
      out.modified_functions.insert(qualified(path, kTopLevel));
      continue;
    }

    std::string pre, post;
    if (d.is_addition()) {
      post = apply_delta("", d);
    } else {
      auto content = tree.read(*d.old_path);
      if (!content && d.is_deletion()) content = reconstruct_deleted(d);
      if (!content) throw FileNotInTree(*d.old_path);
      pre = std::move(*content);
      if (!d.is_deletion()) {
        try {
          post = apply_delta(pre, d);
        } catch (const PatchApplyError& e) {
          out.warnings.push_back("PatchDoesNotApply(" + path +
                                 "): " + e.what());
          fallback_from_sections(d, path, out);
          continue;
        }
      }
    }

    bool need_pre = false, need_post = false;
    for (const Hunk& h : d.hunks) {
      for (const HunkLine& l : h.lines) {
        need_pre |= l.kind == LineKind::kRemoved;
        need_post |= l.kind == LineKind::kAdded;
      }
    }
    SpanScan pre_scan, post_scan;
    if (need_pre) pre_scan = scan_function_spans(pre);
    if (need_post) post_scan = scan_function_spans(post);
    if ((need_pre && !pre_scan.balanced) || (need_post && !post_scan.balanced)) {
      const std::string& problem =
          (need_pre && !pre_scan.balanced) ? pre_scan.problem
                                           : post_scan.problem;
      out.warnings.push_back("UnbalancedBraces(" + path + "): " + problem);
      fallback_from_sections(d, path, out);
      continue;
    }

    for (const Hunk& h : d.hunks) {
      long old_line = first_line_of(h, true);
      long new_line = first_line_of(h, false);
      for (const HunkLine& l : h.lines) {
        switch (l.kind) {
          case LineKind::kContext:
            ++old_line;
            ++new_line;
            break;
          case LineKind::kRemoved:
            out.modified_functions.insert(
                qualified(path, span_owner(pre_scan, old_line)));
            ++old_line;
            break;
          case LineKind::kAdded:
            out.modified_functions.insert(
                qualified(path, span_owner(post_scan, new_line)));
            ++new_line;
            break;
        }
      }
    }
  }
  return out;
}

double iou(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  const std::size_t uni = a.size() + b.size() - inter;
  return double(inter) / double(uni);
}

LocalizationScore localization_iou(const DiffAnalysis& agent,
                                   const DiffAnalysis& dev) {
  return {iou(agent.modified_files, dev.modified_files),
          iou(agent.modified_functions, dev.modified_functions)};
}

}  // namespace crashbench::patch
