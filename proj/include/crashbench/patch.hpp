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

#ifndef CRASHBENCH_PATCH_HPP_
#define CRASHBENCH_PATCH_HPP_

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crashbench/error.hpp"

namespace crashbench::patch {

enum class LineKind : char {
  kContext = ' ',
  kAdded = '+',
  kRemoved = '-',
};

struct HunkLine {
  LineKind kind = LineKind::kContext;
  std::string text;
  bool no_newline_at_eof = false;

  friend bool operator==(const HunkLine&, const HunkLine&) = default;
};

struct Hunk {
  long old_start = 0;
  long old_len = 0;
  long new_start = 0;
  long new_len = 0;
  std::string section;  // text after the closing "@@", without the space
  std::vector<HunkLine> lines;

  friend bool operator==(const Hunk&, const Hunk&) = default;
};

// One file's worth of a unified diff. An absent old_path means the file is
// added; an absent new_path means it is deleted.
struct FileDelta {
  std::optional<std::string> old_path;
  std::optional<std::string> new_path;
  std::optional<std::string> old_mode;
  std::optional<std::string> new_mode;
  bool binary = false;
  std::vector<Hunk> hunks;

  bool is_addition() const { return !old_path.has_value(); }
  bool is_deletion() const { return !new_path.has_value(); }
  bool is_rename() const {
    return old_path && new_path && *old_path != *new_path;
  }
  // A delta whose only effect is a file-mode change.
  bool is_mode_only() const {
    return !is_rename() && !is_addition() && !is_deletion() && !binary &&
           hunks.empty();
  }
  // New path for additions, modifications and renames; old path for
  // deletions.
  const std::string& path() const { return new_path ? *new_path : *old_path; }

  friend bool operator==(const FileDelta&, const FileDelta&) = default;
};

struct Patch {
  std::vector<FileDelta> files;
  std::string raw_text;

  bool empty() const { return files.empty(); }

  // Structural equality; raw_text is not compared.
  friend bool operator==(const Patch& a, const Patch& b) {
    return a.files == b.files;
  }
};

class PatchApplyError : public Error {
 public:
  PatchApplyError(const std::string& path, const std::string& why)
      : Error("PatchApplyError", path + ": " + why) {}
};

// Parses git-style or plain unified diffs. Whitespace-only input yields an
// empty Patch. Throws DiffSyntaxError with a 1-based line number.
Patch parse_unified_diff(std::string_view text);

// Git-style rendering with normalized headers ("@@ -a,b +c,d @@").
std::string serialize(const Patch& patch);
std::string serialize(const FileDelta& delta);

struct PatchSize {
  long loc = 0;    // added + removed lines
  long files = 0;  // distinct touched paths, mode-only deltas excluded

  friend bool operator==(const PatchSize&, const PatchSize&) = default;
};

PatchSize patch_size(const Patch& patch);

// Normalizes a repository-relative path. Rejects absolute paths and ".."
// segments by returning nullopt.
std::optional<std::string> normalize_path(std::string_view path);

// --- Line-level text model ---------------------------------------------

struct TextLines {
  std::vector<std::string> lines;
  bool final_newline = true;  // meaningful only when lines is nonempty
};

TextLines split_lines(std::string_view content);
std::string join_lines(const TextLines& text);

// Applies one delta to the old file content. Context must match exactly.
// Throws PatchApplyError.
std::string apply_delta(std::string_view original, const FileDelta& delta);

using FileMap = std::map<std::string, std::string>;

// Applies a whole patch to a file map (additions, deletions, renames).
FileMap apply_patch(const FileMap& files, const Patch& patch);

// Unified diff of one file (Myers, 3 lines of context). Either side may be
// absent to express addition or deletion. Returns "" when identical.
std::string diff_file(const std::string& path,
                      const std::optional<std::string>& before,
                      const std::optional<std::string>& after,
                      int context = 3);

// Net edit between two snapshots, files in sorted path order.
std::string diff_trees(const FileMap& before, const FileMap& after);

}  // namespace crashbench::patch

#endif  // CRASHBENCH_PATCH_HPP_
