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

#include "crashbench/patch.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <utility>

namespace crashbench::patch {
namespace {

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

std::vector<std::string_view> split_raw_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      out.push_back(text.substr(pos));
      break;
    }
    out.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return out;
}

std::string unquote(std::string_view s) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') {
    return std::string(s);
  }
  std::string out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] == '\\' && i + 2 < s.size()) {
      const char e = s[++i];
      switch (e) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        default: out.push_back(e); break;
      }
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

std::string_view strip_side_prefix(std::string_view p) {
  if (starts_with(p, "a/") || starts_with(p, "b/")) return p.substr(2);
  return p;
}

// Returns nullopt for /dev/null.
std::optional<std::string> header_path(std::string_view raw,
                                       std::size_t line_no) {
  std::string_view s = raw;
  if (!s.empty() && s.front() != '"') {
    const std::size_t tab = s.find('\t');
    if (tab != std::string_view::npos) s = s.substr(0, tab);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  const std::string unq = unquote(s);
  if (unq == "/dev/null") return std::nullopt;
  auto norm = normalize_path(strip_side_prefix(unq));
  if (!norm) throw DiffSyntaxError(line_no, "invalid path '" + unq + "'");
  return norm;
}

std::pair<std::string, std::string> git_header_paths(std::string_view rest,
                                                     std::size_t line_no) {
  std::string_view a, b;
  if (!rest.empty() && rest.front() == '"') {
    const std::size_t close = rest.find('"', 1);
    if (close == std::string_view::npos || close + 2 > rest.size()) {
      throw DiffSyntaxError(line_no, "malformed diff --git header");
    }
    a = rest.substr(0, close + 1);
    b = rest.substr(close + 2);
  } else {
    // "a/P b/P" with identical P is the common case and tolerates spaces.
    bool split = false;
    if (rest.size() >= 5 && (rest.size() - 5) % 2 == 0) {
      const std::size_t plen = (rest.size() - 5) / 2;
      const std::string_view left = rest.substr(0, plen + 2);
      const std::string_view right = rest.substr(plen + 3);
      if (rest[plen + 2] == ' ' && starts_with(left, "a/") &&
          starts_with(right, "b/") && left.substr(2) == right.substr(2)) {
        a = left;
        b = right;
        split = true;
      }
    }
    if (!split) {
      const std::size_t sep = rest.find(" b/");
      if (sep == std::string_view::npos) {
        throw DiffSyntaxError(line_no, "malformed diff --git header");
      }
      a = rest.substr(0, sep);
      b = rest.substr(sep + 1);
    }
  }
  auto pa = normalize_path(strip_side_prefix(unquote(a)));
  auto pb = normalize_path(strip_side_prefix(unquote(b)));
  if (!pa || !pb) throw DiffSyntaxError(line_no, "invalid path in header");
  return {*pa, *pb};
}

bool parse_number(std::string_view s, std::size_t& pos, long& out) {
  const std::size_t start = pos;
  long v = 0;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
    v = v * 10 + (s[pos] - '0');
    ++pos;
  }
  out = v;
  return pos > start;
}

Hunk parse_hunk_header(std::string_view line, std::size_t line_no) {
  Hunk h;
  std::size_t pos = 3;  // after "@@ "
  auto fail = [&] { throw DiffSyntaxError(line_no, "malformed hunk header"); };
  if (!starts_with(line, "@@ -")) fail();
  pos = 4;
  if (!parse_number(line, pos, h.old_start)) fail();
  h.old_len = 1;
  if (pos < line.size() && line[pos] == ',') {
    ++pos;
    if (!parse_number(line, pos, h.old_len)) fail();
  }
  if (line.substr(pos, 2) != " +") fail();
  pos += 2;
  if (!parse_number(line, pos, h.new_start)) fail();
  h.new_len = 1;
  if (pos < line.size() && line[pos] == ',') {
    ++pos;
    if (!parse_number(line, pos, h.new_len)) fail();
  }
  if (line.substr(pos, 3) != " @@") fail();
  pos += 3;
  if (pos < line.size()) {
    std::string_view section = line.substr(pos);
    if (section.front() == ' ') section.remove_prefix(1);
    h.section = std::string(section);
  }
  return h;
}

// Zero-length hunks sit on the boundary after old_start.
long hunk_begin(const Hunk& h) {
  return h.old_len > 0 ? h.old_start : h.old_start + 1;
}
long hunk_end(const Hunk& h) {
  return h.old_len > 0 ? h.old_start + h.old_len : h.old_start + 1;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : lines_(split_raw_lines(text)) {}

  Patch run() {
    Patch patch;
    std::size_t i = 0;
    while (i < lines_.size()) {
      const std::string_view line = lines_[i];
      const std::size_t line_no = i + 1;

      if (starts_with(line, "diff --git ")) {
        auto [a, b] = git_header_paths(line.substr(11), line_no);
        start_delta(patch);
        current(patch).old_path = a;
        current(patch).new_path = b;
        git_header_ = true;
        ++i;
        continue;
      }
      if (skipping_) {
        ++i;
        continue;
      }
      if (has_delta_ && git_header_ && !seen_file_header_) {
        if (consume_extended_header(current(patch), line, line_no)) {
          ++i;
          continue;
        }
      }
      if (starts_with(line, "--- ") && i + 1 < lines_.size() &&
          starts_with(lines_[i + 1], "+++ ")) {
        const bool continues_git =
            has_delta_ && git_header_ && !seen_file_header_;
        if (!continues_git) {
          start_delta(patch);
          git_header_ = false;
        }
        FileDelta& d = current(patch);
        auto old_path = header_path(line.substr(4), line_no);
        auto new_path = header_path(lines_[i + 1].substr(4), line_no + 1);
        if (!old_path && !new_path) {
          throw DiffSyntaxError(line_no, "both sides are /dev/null");
        }
        if (continues_git) {
          if (!old_path) d.old_path.reset();
          if (!new_path) d.new_path.reset();
        } else {
          d.old_path = old_path;
          d.new_path = new_path;
        }
        seen_file_header_ = true;
        i += 2;
        continue;
      }
      if (starts_with(line, "@@")) {
        if (!has_delta_ || !seen_file_header_) {
          throw DiffSyntaxError(line_no, "hunk outside of a file section");
        }
        i = parse_hunk(current(patch), i);
        continue;
      }
      if (has_delta_ && seen_file_header_ && !line.empty() &&
          (line[0] == '+' || line[0] == '-' || line[0] == ' ')) {
        if (line == "-- ") {
          // format-patch signature; nothing but trailer follows.
          skipping_ = true;
          ++i;
          continue;
        }
        throw DiffSyntaxError(line_no, "line outside of any hunk");
      }
      ++i;  // preamble, trailer, or unrecognized metadata
    }
    return patch;
  }

 private:
  FileDelta& current(Patch& p) { return p.files.back(); }

  void start_delta(Patch& p) {
    p.files.emplace_back();
    has_delta_ = true;
    seen_file_header_ = false;
    skipping_ = false;
  }

  bool consume_extended_header(FileDelta& d, std::string_view line,
                               std::size_t line_no) {
    auto value = [&](std::string_view prefix) {
      return std::string(line.substr(prefix.size()));
    };
    auto path_value = [&](std::string_view prefix) {
      auto p = normalize_path(unquote(line.substr(prefix.size())));
      if (!p) throw DiffSyntaxError(line_no, "invalid path");
      return *p;
    };
    if (starts_with(line, "new file mode ")) {
      d.old_path.reset();
      d.new_mode = value("new file mode ");
    } else if (starts_with(line, "deleted file mode ")) {
      d.new_path.reset();
      d.old_mode = value("deleted file mode ");
    } else if (starts_with(line, "old mode ")) {
      d.old_mode = value("old mode ");
    } else if (starts_with(line, "new mode ")) {
      d.new_mode = value("new mode ");
    } else if (starts_with(line, "rename from ")) {
      d.old_path = path_value("rename from ");
    } else if (starts_with(line, "rename to ")) {
      d.new_path = path_value("rename to ");
    } else if (starts_with(line, "copy from ") ||
               starts_with(line, "copy to ")) {
      throw DiffSyntaxError(line_no, "copy headers are not supported");
    } else if (starts_with(line, "similarity index ") ||
               starts_with(line, "dissimilarity index ") ||
               starts_with(line, "index ")) {
      // informational
    } else if (starts_with(line, "Binary files ") ||
               starts_with(line, "GIT binary patch")) {
      d.binary = true;
      if (starts_with(line, "GIT binary patch")) skipping_ = true;
    } else {
      return false;
    }
    return true;
  }

  std::size_t parse_hunk(FileDelta& d, std::size_t i) {
    const std::size_t header_no = i + 1;
    Hunk h = parse_hunk_header(lines_[i], header_no);
    ++i;
    long old_rem = h.old_len;
    long new_rem = h.new_len;
    while (old_rem > 0 || new_rem > 0) {
      if (i >= lines_.size()) {
        throw DiffSyntaxError(header_no,
                              "hunk body shorter than its header counts");
      }
      const std::string_view l = lines_[i];
      if (!l.empty() && l[0] == '\\') {
        mark_no_newline(h, i + 1);
        ++i;
        continue;
      }
      HunkLine hl;
      const char tag = l.empty() ? ' ' : l[0];
      switch (tag) {
        case ' ':
          hl.kind = LineKind::kContext;
          --old_rem;
          --new_rem;
          break;
        case '-':
          hl.kind = LineKind::kRemoved;
          --old_rem;
          break;
        case '+':
          hl.kind = LineKind::kAdded;
          --new_rem;
          break;
        default:
          throw DiffSyntaxError(header_no,
                                "hunk body shorter than its header counts");
      }
      if (old_rem < 0 || new_rem < 0) {
        throw DiffSyntaxError(i + 1, "hunk body does not match header counts");
      }
      hl.text = l.empty() ? std::string() : std::string(l.substr(1));
      h.lines.push_back(std::move(hl));
      ++i;
    }
    if (i < lines_.size() && !lines_[i].empty() && lines_[i][0] == '\\') {
      mark_no_newline(h, i + 1);
      ++i;
    }
    if (!d.hunks.empty() && hunk_begin(h) < hunk_end(d.hunks.back())) {
      throw DiffSyntaxError(header_no, "hunks overlap or are out of order");
    }
    d.hunks.push_back(std::move(h));
    return i;
  }

  static void mark_no_newline(Hunk& h, std::size_t line_no) {
    if (h.lines.empty()) {
      throw DiffSyntaxError(line_no, "no-newline marker without a line");
    }
    h.lines.back().no_newline_at_eof = true;
  }

  std::vector<std::string_view> lines_;
  bool has_delta_ = false;
  bool git_header_ = false;
  bool seen_file_header_ = false;
  bool skipping_ = false;
};

// --- Myers diff ----------------------------------------------------------

enum class OpKind { kEqual, kDelete, kInsert };

struct Op {
  OpKind kind;
  std::size_t a;  // index in old (valid for equal/delete)
  std::size_t b;  // index in new (valid for equal/insert)
};

std::vector<Op> myers(const std::vector<std::string>& a,
                      const std::vector<std::string>& b) {
  std::size_t prefix = 0;
  while (prefix < a.size() && prefix < b.size() && a[prefix] == b[prefix]) {
    ++prefix;
  }
  std::size_t suffix = 0;
  while (suffix < a.size() - prefix && suffix < b.size() - prefix &&
         a[a.size() - 1 - suffix] == b[b.size() - 1 - suffix]) {
    ++suffix;
  }
  const long n = long(a.size() - prefix - suffix);
  const long m = long(b.size() - prefix - suffix);
  auto A = [&](long i) -> const std::string& { return a[prefix + i]; };
  auto B = [&](long j) -> const std::string& { return b[prefix + j]; };

  std::vector<Op> middle;
  if (n == 0 || m == 0) {
    for (long i = 0; i < n; ++i) {
      middle.push_back({OpKind::kDelete, std::size_t(prefix + i), 0});
    }
    for (long j = 0; j < m; ++j) {
      middle.push_back({OpKind::kInsert, 0, std::size_t(prefix + j)});
    }
  } else {
    const long max = n + m;
    const long offset = max;
    std::vector<long> v(2 * max + 2, 0);
    std::vector<std::vector<long>> trace;
    long final_d = 0;
    bool done = false;
    for (long d = 0; d <= max && !done; ++d) {
      trace.push_back(v);
      for (long k = -d; k <= d; k += 2) {
        long x;
        if (k == -d || (k != d && v[offset + k - 1] < v[offset + k + 1])) {
          x = v[offset + k + 1];
        } else {
          x = v[offset + k - 1] + 1;
        }
        long y = x - k;
        while (x < n && y < m && A(x) == B(y)) {
          ++x;
          ++y;
        }
        v[offset + k] = x;
        if (x >= n && y >= m) {
          final_d = d;
          done = true;
          break;
        }
      }
    }
    // Backtrack through the saved frontiers.
    long x = n, y = m;
    std::vector<Op> rev;
    for (long d = final_d; d > 0; --d) {
      const std::vector<long>& pv = trace[d];
      const long k = x - y;
      long prev_k;
      if (k == -d || (k != d && pv[offset + k - 1] < pv[offset + k + 1])) {
        prev_k = k + 1;
      } else {
        prev_k = k - 1;
      }
      const long prev_x = pv[offset + prev_k];
      const long prev_y = prev_x - prev_k;
      while (x > prev_x && y > prev_y) {
        --x;
        --y;
        rev.push_back({OpKind::kEqual, std::size_t(prefix + x),
                       std::size_t(prefix + y)});
      }
      if (x == prev_x) {
        --y;
        rev.push_back({OpKind::kInsert, 0, std::size_t(prefix + y)});
      } else {
        --x;
        rev.push_back({OpKind::kDelete, std::size_t(prefix + x), 0});
      }
    }
    while (x > 0 && y > 0) {
      --x;
      --y;
      rev.push_back(
          {OpKind::kEqual, std::size_t(prefix + x), std::size_t(prefix + y)});
    }
    middle.assign(rev.rbegin(), rev.rend());
  }

  std::vector<Op> ops;
  ops.reserve(prefix + middle.size() + suffix);
  for (std::size_t i = 0; i < prefix; ++i) ops.push_back({OpKind::kEqual, i, i});
  ops.insert(ops.end(), middle.begin(), middle.end());
  for (std::size_t s = suffix; s > 0; --s) {
    ops.push_back({OpKind::kEqual, a.size() - s, b.size() - s});
  }
  return ops;
}

constexpr char kNoEol = '\0';

std::vector<std::string> comparison_tokens(const TextLines& t) {
  std::vector<std::string> tokens = t.lines;
  if (!tokens.empty() && !t.final_newline) tokens.back().push_back(kNoEol);
  return tokens;
}

HunkLine token_line(LineKind kind, const std::string& token) {
  HunkLine l;
  l.kind = kind;
  if (!token.empty() && token.back() == kNoEol) {
    l.text = token.substr(0, token.size() - 1);
    l.no_newline_at_eof = true;
  } else {
    l.text = token;
  }
  return l;
}

// Mirrors the default funcname rule of common diff tools: the nearest
// preceding line starting with a letter, '_' or '$'.
std::string section_for(const std::vector<std::string>& old_lines,
                        std::size_t before) {
  for (std::size_t i = before; i > 0; --i) {
    const std::string& l = old_lines[i - 1];
    if (!l.empty() && (std::isalpha(static_cast<unsigned char>(l[0])) ||
                       l[0] == '_' || l[0] == '$')) {
      std::string s = l;
      while (!s.empty() && (s.back() == kNoEol || s.back() == ' ' ||
                            s.back() == '\t' || s.back() == '\r')) {
        s.pop_back();
      }
      return s;
    }
  }
  return {};
}

std::vector<Hunk> build_hunks(const std::vector<std::string>& a,
                              const std::vector<std::string>& b,
                              int context) {
  const std::vector<Op> ops = myers(a, b);
  const long count = long(ops.size());
  std::vector<char> include(ops.size(), 0);
  long last_change = -1;
  for (long i = 0; i < count; ++i) {
    if (ops[i].kind != OpKind::kEqual) last_change = i;
    if (last_change >= 0 && i - last_change <= context) include[i] = 1;
  }
  long next_change = -1;
  for (long i = count - 1; i >= 0; --i) {
    if (ops[i].kind != OpKind::kEqual) next_change = i;
    if (next_change >= 0 && next_change - i <= context) include[i] = 1;
  }

  std::vector<Hunk> hunks;
  std::size_t a_pos = 0, b_pos = 0;
  long i = 0;
  while (i < count) {
    if (!include[i]) {
      if (ops[i].kind != OpKind::kInsert) ++a_pos;
      if (ops[i].kind != OpKind::kDelete) ++b_pos;
      ++i;
      continue;
    }
    Hunk h;
    const std::size_t a_first = a_pos, b_first = b_pos;
    for (; i < count && include[i]; ++i) {
      const Op& op = ops[i];
      switch (op.kind) {
        case OpKind::kEqual:
          h.lines.push_back(token_line(LineKind::kContext, a[op.a]));
          ++a_pos;
          ++b_pos;
          ++h.old_len;
          ++h.new_len;
          break;
        case OpKind::kDelete:
          h.lines.push_back(token_line(LineKind::kRemoved, a[op.a]));
          ++a_pos;
          ++h.old_len;
          break;
        case OpKind::kInsert:
          h.lines.push_back(token_line(LineKind::kAdded, b[op.b]));
          ++b_pos;
          ++h.new_len;
          break;
      }
    }
    h.old_start = h.old_len > 0 ? long(a_first) + 1 : long(a_first);
    h.new_start = h.new_len > 0 ? long(b_first) + 1 : long(b_first);
    h.section = section_for(a, a_first);
    hunks.push_back(std::move(h));
  }
  return hunks;
}

}  // namespace

std::optional<std::string> normalize_path(std::string_view path) {
  if (path.empty() || path.front() == '/') return std::nullopt;
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (pos <= path.size()) {
    std::size_t slash = path.find('/', pos);
    if (slash == std::string_view::npos) slash = path.size();
    const std::string_view seg = path.substr(pos, slash - pos);
    if (seg == "..") return std::nullopt;
    if (!seg.empty() && seg != ".") parts.push_back(seg);
    pos = slash + 1;
  }
  if (parts.empty()) return std::nullopt;
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.push_back('/');
    out.append(parts[i]);
  }
  return out;
}

Patch parse_unified_diff(std::string_view text) {
  Patch patch;
  if (std::all_of(text.begin(), text.end(), [](char c) {
        return std::isspace(static_cast<unsigned char>(c));
      })) {
    patch.raw_text = std::string(text);
    return patch;
  }
  patch = Parser(text).run();
  patch.raw_text = std::string(text);
  return patch;
}

std::string serialize(const FileDelta& d) {
  const std::string old_name = d.old_path ? *d.old_path : *d.new_path;
  const std::string new_name = d.new_path ? *d.new_path : *d.old_path;
  std::string out = "diff --git a/" + old_name + " b/" + new_name + "\n";
  if (d.is_addition()) {
    if (d.new_mode) out += "new file mode " + *d.new_mode + "\n";
  } else if (d.is_deletion()) {
    if (d.old_mode) out += "deleted file mode " + *d.old_mode + "\n";
  } else {
    if (d.old_mode) out += "old mode " + *d.old_mode + "\n";
    if (d.new_mode) out += "new mode " + *d.new_mode + "\n";
  }
  if (d.is_rename()) {
    out += "rename from " + *d.old_path + "\n";
    out += "rename to " + *d.new_path + "\n";
  }
  if (d.binary) {
    out += "Binary files " +
           (d.old_path ? "a/" + *d.old_path : std::string("/dev/null")) +
           " and " +
           (d.new_path ? "b/" + *d.new_path : std::string("/dev/null")) +
           " differ\n";
    return out;
  }
  if (d.hunks.empty()) return out;
  out += "--- " + (d.old_path ? "a/" + *d.old_path : std::string("/dev/null")) +
         "\n";
  out += "+++ " + (d.new_path ? "b/" + *d.new_path : std::string("/dev/null")) +
         "\n";
  for (const Hunk& h : d.hunks) {
    out += "@@ -" + std::to_string(h.old_start) + "," +
           std::to_string(h.old_len) + " +" + std::to_string(h.new_start) +
           "," + std::to_string(h.new_len) + " @@";
    if (!h.section.empty()) out += " " + h.section;
    out += "\n";
    for (const HunkLine& l : h.lines) {
      out.push_back(static_cast<char>(l.kind));
      out += l.text;
      out += "\n";
      if (l.no_newline_at_eof) out += "\\ No newline at end of file\n";
    }
  }
  return out;
}

std::string serialize(const Patch& patch) {
  std::string out;
  for (const FileDelta& d : patch.files) out += serialize(d);
  return out;
}

PatchSize patch_size(const Patch& patch) {
  PatchSize size;
  std::set<std::string> paths;
  for (const FileDelta& d : patch.files) {
    if (d.is_mode_only()) continue;
    paths.insert(d.path());
    for (const Hunk& h : d.hunks) {
      for (const HunkLine& l : h.lines) {
        if (l.kind != LineKind::kContext) ++size.loc;
      }
    }
  }
  size.files = long(paths.size());
  return size;
}

TextLines split_lines(std::string_view content) {
  TextLines t;
  if (content.empty()) return t;
  std::size_t pos = 0;
  while (pos < content.size()) {
    const std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) {
      t.lines.emplace_back(content.substr(pos));
      t.final_newline = false;
      return t;
    }
    t.lines.emplace_back(content.substr(pos, nl - pos));
    pos = nl + 1;
  }
  t.final_newline = true;
  return t;
}

std::string join_lines(const TextLines& text) {
  std::string out;
  for (std::size_t i = 0; i < text.lines.size(); ++i) {
    out += text.lines[i];
    if (i + 1 < text.lines.size() || text.final_newline) out.push_back('\n');
  }
  return out;
}

std::string apply_delta(std::string_view original, const FileDelta& delta) {
  const std::string& path = delta.path();
  const TextLines src = split_lines(original);
  TextLines out;
  bool out_eol = true;
  std::size_t idx = 0;
  auto copy_src_line = [&](std::size_t k) {
    out.lines.push_back(src.lines[k]);
    out_eol = !(k + 1 == src.lines.size() && !src.final_newline);
  };
  for (std::size_t hi = 0; hi < delta.hunks.size(); ++hi) {
    const Hunk& h = delta.hunks[hi];
    const std::size_t start =
        h.old_len > 0 ? std::size_t(h.old_start - 1) : std::size_t(h.old_start);
    if (start < idx || start > src.lines.size()) {
      throw PatchApplyError(path, "hunk " + std::to_string(hi + 1) +
                                      " is out of range");
    }
    while (idx < start) copy_src_line(idx++);
    for (const HunkLine& l : h.lines) {
      if (l.kind == LineKind::kAdded) {
        out.lines.push_back(l.text);
        out_eol = !l.no_newline_at_eof;
        continue;
      }
      if (idx >= src.lines.size() || src.lines[idx] != l.text) {
        throw PatchApplyError(path, "hunk " + std::to_string(hi + 1) +
                                        " does not apply at line " +
                                        std::to_string(idx + 1));
      }
      if (l.kind == LineKind::kContext) {
        out.lines.push_back(l.text);
        out_eol = !l.no_newline_at_eof;
      }
      ++idx;
    }
  }
  while (idx < src.lines.size()) copy_src_line(idx++);
  out.final_newline = out.lines.empty() ? true : out_eol;
  return join_lines(out);
}

FileMap apply_patch(const FileMap& files, const Patch& patch) {
  FileMap result = files;
  for (const FileDelta& d : patch.files) {
    if (d.binary) throw PatchApplyError(d.path(), "binary deltas unsupported");
    if (d.is_addition()) {
      if (result.count(*d.new_path)) {
        throw PatchApplyError(*d.new_path, "file already exists");
      }
      result[*d.new_path] = apply_delta("", d);
      continue;
    }
    auto it = result.find(*d.old_path);
    if (it == result.end()) {
      throw PatchApplyError(*d.old_path, "file does not exist");
    }
    if (d.is_deletion()) {
      if (!d.hunks.empty()) apply_delta(it->second, d);  // validates content
      result.erase(it);
      continue;
    }
    std::string content =
        d.hunks.empty() ? it->second : apply_delta(it->second, d);
    if (d.is_rename()) result.erase(it);
    result[*d.new_path] = std::move(content);
  }
  return result;
}

std::string diff_file(const std::string& path,
                      const std::optional<std::string>& before,
                      const std::optional<std::string>& after, int context) {
  if (!before && !after) return {};
  if (before && after && *before == *after) return {};
  FileDelta d;
  if (before) d.old_path = path;
  if (after) d.new_path = path;
  if (!before) d.new_mode = "100644";
  if (!after) d.old_mode = "100644";
  const auto a = comparison_tokens(split_lines(before.value_or("")));
  const auto b = comparison_tokens(split_lines(after.value_or("")));
  d.hunks = build_hunks(a, b, context);
  return serialize(d);
}

std::string diff_trees(const FileMap& before, const FileMap& after) {
  std::set<std::string> paths;
  for (const auto& [p, _] : before) paths.insert(p);
  for (const auto& [p, _] : after) paths.insert(p);
  std::string out;
  for (const std::string& p : paths) {
    auto b = before.find(p);
    auto a = after.find(p);
    out += diff_file(p,
                     b == before.end() ? std::nullopt
                                       : std::optional<std::string>(b->second),
                     a == after.end() ? std::nullopt
                                      : std::optional<std::string>(a->second));
  }
  return out;
}

}  // namespace crashbench::patch
