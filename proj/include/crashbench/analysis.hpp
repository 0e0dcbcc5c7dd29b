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

#ifndef CRASHBENCH_ANALYSIS_HPP_
#define CRASHBENCH_ANALYSIS_HPP_

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "crashbench/patch.hpp"
#include "json.hpp"

namespace crashbench::patch {

// Read-only view of a source tree at some revision.
class SourceTree {
 public:
  virtual ~SourceTree() = default;
  virtual std::optional<std::string> read(const std::string& path) const = 0;
};

class DirectoryTree final : public SourceTree {
 public:
  explicit DirectoryTree(std::filesystem::path root) : root_(std::move(root)) {}
  std::optional<std::string> read(const std::string& path) const override;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

class MemoryTree final : public SourceTree {
 public:
  MemoryTree() = default;
  explicit MemoryTree(FileMap files) : files_(std::move(files)) {}
  std::optional<std::string> read(const std::string& path) const override;
  FileMap& files() { return files_; }

 private:
  FileMap files_;
};

// Every regular file under `root` keyed by its generic relative path.
// ".git" directories are skipped.
FileMap read_tree(const std::filesystem::path& root);
void write_tree(const std::filesystem::path& root, const FileMap& files);

// --- Function spans --------------------------------------------------------

struct FunctionSpan {
  std::string name;
  long first_line = 0;  // first line of the declaration, 1-based
  long last_line = 0;   // line holding the closing brace

  friend bool operator==(const FunctionSpan&, const FunctionSpan&) = default;
};

struct SpanScan {
  std::vector<FunctionSpan> functions;
  bool balanced = true;
  std::string problem;  // set when !balanced
};

// Top-level brace matching over C-like source after comments, string and
// character literals, and preprocessor directives are blanked out. A
// top-level brace block is a function body when the declaration in front of
// it names an identifier followed by a parameter list and carries no
// top-level '=' (which would make it an initializer).
SpanScan scan_function_spans(std::string_view source);

bool is_c_like(std::string_view path);

// Function named by a hunk-header trailer such as "static int foo(void)".
std::optional<std::string> function_from_section(std::string_view section);

// --- Diff analysis ----------------------------------------------------------

inline constexpr std::string_view kTopLevel = "<toplevel>";

struct DiffAnalysis {
  std::set<std::string> modified_files;
  std::set<std::string> modified_functions;  // "path::function"
  std::vector<std::string> warnings;

  // Warnings are diagnostics and do not take part in equality.
  friend bool operator==(const DiffAnalysis& a, const DiffAnalysis& b) {
    return a.modified_files == b.modified_files &&
           a.modified_functions == b.modified_functions;
  }
};

void to_json(nlohmann::json& j, const DiffAnalysis& a);
void from_json(const nlohmann::json& j, DiffAnalysis& a);

// Deterministic bytes (sorted arrays, sorted keys) for caching.
std::string analysis_json(const DiffAnalysis& a);

// Removed lines are attributed using spans of the pre-image and added lines
// using spans of the post-image. Changes outside every function body count
// as "path::<toplevel>". When either image has unbalanced braces, or the
// patch does not apply to the tree, the file falls back to the hunk-header
// trailer and a warning is recorded. Throws FileNotInTree.
DiffAnalysis extract_modified_functions(const Patch& patch,
                                        const SourceTree& tree);

struct LocalizationScore {
  double file_iou = 0.0;
  double function_iou = 0.0;

  friend bool operator==(const LocalizationScore&,
                         const LocalizationScore&) = default;
};

// |A∩B| / |A∪B|, with IoU(∅, ∅) = 1.
double iou(const std::set<std::string>& a, const std::set<std::string>& b);

LocalizationScore localization_iou(const DiffAnalysis& agent,
                                   const DiffAnalysis& dev);

}  // namespace crashbench::patch

#endif  // CRASHBENCH_ANALYSIS_HPP_
