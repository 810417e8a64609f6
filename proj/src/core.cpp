#include "reprompt/core.hpp"

#include <algorithm>
#include <cstring>
#include <string_view>

namespace reprompt {

// ---- regions -------------------------------------------------------------------

CodeRegion make_region(std::string file_id, int start_line, int end_line) {
  if (start_line < 1 || end_line < start_line) {
    throw ValidationError("invalid region: start_line=" + std::to_string(start_line) +
                          " end_line=" + std::to_string(end_line));
  }
  return CodeRegion{std::move(file_id), start_line, end_line};
}

std::optional<int> region_line_gap(const CodeRegion& a, const CodeRegion& b) {
  if (a.file_id != b.file_id) return std::nullopt;
  if (a.end_line < b.start_line) return b.start_line - a.end_line;
  if (b.end_line < a.start_line) return a.start_line - b.end_line;
  return 0;
}

// ---- prompts and snapshots --------------------------------------------------------

void validate_prompt(const Prompt& prompt) {
  if (trim(prompt.text).empty()) throw ValidationError("prompt text is empty");
}

SnapshotStore SnapshotStore::open(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::exists(root) || !fs::is_directory(root)) {
    throw IoError("snapshot store is not a directory: " + root.string());
  }
  SnapshotStore store;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    const std::string stem = entry.path().stem().string();
    if (stem.empty() || stem.find_first_not_of("0123456789") != std::string::npos) continue;
    std::string file_id =
        entry.path().parent_path().lexically_relative(root).generic_string();
    if (file_id == ".") file_id = "";
    std::int64_t ts = std::stoll(stem);
    store.by_file_[file_id][ts] = normalize_newlines(read_file(entry.path()));
  }
  return store;
}

void SnapshotStore::add(CodeSnapshot snapshot) {
  by_file_[snapshot.file_id][snapshot.ts] = std::move(snapshot.content);
}

std::optional<CodeSnapshot> SnapshotStore::first_at_or_after(const std::string& file_id,
                                                             std::int64_t ts) const {
  auto file_it = by_file_.find(file_id);
  if (file_it == by_file_.end()) return std::nullopt;
  auto snap_it = file_it->second.lower_bound(ts);
  if (snap_it == file_it->second.end()) return std::nullopt;
  return CodeSnapshot{file_id, snap_it->first, snap_it->second};
}

void SnapshotStore::save(const std::filesystem::path& root) const {
  for (const auto& [file_id, snaps] : by_file_) {
    for (const auto& [ts, content] : snaps) {
      write_file(root / file_id / (std::to_string(ts) + ".txt"), content);
    }
  }
}

std::size_t SnapshotStore::size() const {
  std::size_t n = 0;
  for (const auto& [file_id, snaps] : by_file_) n += snaps.size();
  return n;
}

// ---- diff internals ---------------------------------------------------------------

namespace {

struct LineRec {
  std::string_view text;
  bool has_newline = true;

  bool operator==(const LineRec& other) const {
    return has_newline == other.has_newline && text == other.text;
  }
};

std::vector<LineRec> split_line_recs(std::string_view text) {
  std::vector<LineRec> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      out.push_back({text.substr(start), false});
      break;
    }
    out.push_back({text.substr(start, nl - start), true});
    start = nl + 1;
  }
  return out;
}

// Edit script op: 'k' keeps one line on both sides, 'd' consumes an old
// line, 'a' emits a new line.
struct Script {
  std::string ops;
};

constexpr std::size_t kLcsCellLimit = 4u * 1024u * 1024u;

// Minimal edit script for the middle section via LCS backtracking. Falls
// back to a whole-block replace when the DP table would be too large; the
// result is then non-minimal but still applies exactly.
Script middle_script(const std::vector<LineRec>& a, std::size_t a_lo, std::size_t a_hi,
                     const std::vector<LineRec>& b, std::size_t b_lo, std::size_t b_hi) {
  const std::size_t n = a_hi - a_lo;
  const std::size_t m = b_hi - b_lo;
  Script script;
  if (n == 0 && m == 0) return script;
  if (n == 0) {
    script.ops.assign(m, 'a');
    return script;
  }
  if (m == 0) {
    script.ops.assign(n, 'd');
    return script;
  }
  if ((n + 1) * (m + 1) > kLcsCellLimit) {
    script.ops.assign(n, 'd');
    script.ops.append(m, 'a');
    return script;
  }
  // dp[i][j] = LCS length of a[a_lo+i..a_hi) vs b[b_lo+j..b_hi)
  std::vector<std::int32_t> dp((n + 1) * (m + 1), 0);
  auto at = [&](std::size_t i, std::size_t j) -> std::int32_t& { return dp[i * (m + 1) + j]; };
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      if (a[a_lo + i] == b[b_lo + j]) {
        at(i, j) = at(i + 1, j + 1) + 1;
      } else {
        at(i, j) = std::max(at(i + 1, j), at(i, j + 1));
      }
    }
  }
  std::size_t i = 0, j = 0;
  while (i < n && j < m) {
    if (a[a_lo + i] == b[b_lo + j] && at(i, j) == at(i + 1, j + 1) + 1) {
      script.ops.push_back('k');
      ++i;
      ++j;
    } else if (at(i + 1, j) >= at(i, j + 1)) {
      script.ops.push_back('d');
      ++i;
    } else {
      script.ops.push_back('a');
      ++j;
    }
  }
  script.ops.append(n - i, 'd');
  script.ops.append(m - j, 'a');
  return script;
}

// Within each contiguous change run, deletions come before additions.
void canonicalize(Script& script) {
  auto& ops = script.ops;
  std::size_t i = 0;
  while (i < ops.size()) {
    if (ops[i] == 'k') {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < ops.size() && ops[j] != 'k') ++j;
    std::stable_partition(ops.begin() + static_cast<long>(i), ops.begin() + static_cast<long>(j),
                          [](char c) { return c == 'd'; });
    i = j;
  }
}

}  // namespace

// ---- diff operations ---------------------------------------------------------------

std::string serialize_hunks(const std::vector<DiffHunk>& hunks) {
  std::string out;
  for (const DiffHunk& hunk : hunks) {
    out += "@@ -" + std::to_string(hunk.old_start) + "," + std::to_string(hunk.old_count) +
           " +" + std::to_string(hunk.new_start) + "," + std::to_string(hunk.new_count) +
           " @@\n";
    for (const DiffLine& line : hunk.lines) {
      switch (line.tag) {
        case LineTag::Context: out.push_back(' '); break;
        case LineTag::Added: out.push_back('+'); break;
        case LineTag::Deleted: out.push_back('-'); break;
      }
      out += line.text;
      out.push_back('\n');
      if (!line.has_newline) out += "\\ No newline at end of file\n";
    }
  }
  return out;
}

namespace {

bool parse_count(const char*& p, long& value) {
  if (*p < '0' || *p > '9') return false;
  long v = 0;
  while (*p >= '0' && *p <= '9') {
    v = v * 10 + (*p - '0');
    if (v > 100'000'000) return false;
    ++p;
  }
  value = v;
  return true;
}

bool parse_hunk_header(const std::string& line, DiffHunk& hunk) {
  const char* p = line.c_str();
  if (std::strncmp(p, "@@ -", 4) != 0) return false;
  p += 4;
  if (!parse_count(p, hunk.old_start)) return false;
  hunk.old_count = 1;
  if (*p == ',') {
    ++p;
    if (!parse_count(p, hunk.old_count)) return false;
  }
  if (p[0] != ' ' || p[1] != '+') return false;
  p += 2;
  if (!parse_count(p, hunk.new_start)) return false;
  hunk.new_count = 1;
  if (*p == ',') {
    ++p;
    if (!parse_count(p, hunk.new_count)) return false;
  }
  if (std::strncmp(p, " @@", 3) != 0) return false;
  if (hunk.old_start == 0 && hunk.old_count != 0) return false;
  if (hunk.new_start == 0 && hunk.new_count != 0) return false;
  return true;
}

bool is_preamble_line(const std::string& line) {
  static const char* kPrefixes[] = {"--- ",     "+++ ",     "diff ",    "index ",
                                    "Index: ",  "new file", "deleted file", "old mode",
                                    "new mode", "rename ",  "similarity", "Binary files"};
  for (const char* prefix : kPrefixes) {
    if (line.rfind(prefix, 0) == 0) return true;
  }
  return line.empty();
}

}  // namespace

EditDiff parse_unified_diff(const std::string& text) {
  EditDiff diff;
  diff.raw_text = text;
  if (text.empty()) return diff;

  std::vector<std::string> lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty() && text.back() == '\n') lines.pop_back();

  std::size_t i = 0;
  while (i < lines.size()) {
    const std::string& line = lines[i];
    if (line.rfind("@@", 0) == 0) {
      DiffHunk hunk;
      if (!parse_hunk_header(line, hunk)) {
        throw ParseError("line " + std::to_string(i + 1) + ": malformed hunk header: " + line);
      }
      const std::size_t header_line = i + 1;
      ++i;
      long rem_old = hunk.old_count;
      long rem_new = hunk.new_count;
      while (rem_old > 0 || rem_new > 0) {
        if (i >= lines.size()) {
          throw ParseError("line " + std::to_string(lines.size()) +
                           ": diff ends inside hunk starting at line " +
                           std::to_string(header_line));
        }
        const std::string& body = lines[i];
        const std::string line_no = std::to_string(i + 1);
        if (!body.empty() && body[0] == '\\') {
          if (hunk.lines.empty()) {
            throw ParseError("line " + line_no + ": no-newline marker without a preceding line");
          }
          hunk.lines.back().has_newline = false;
        } else if (!body.empty() && body[0] == '-') {
          if (rem_old <= 0) {
            throw ParseError("line " + line_no + ": more deleted lines than the hunk declares");
          }
          hunk.lines.push_back({LineTag::Deleted, body.substr(1), true});
          --rem_old;
        } else if (!body.empty() && body[0] == '+') {
          if (rem_new <= 0) {
            throw ParseError("line " + line_no + ": more added lines than the hunk declares");
          }
          hunk.lines.push_back({LineTag::Added, body.substr(1), true});
          --rem_new;
        } else if (body.empty() || body[0] == ' ') {
          if (rem_old <= 0 || rem_new <= 0) {
            throw ParseError("line " + line_no + ": more context lines than the hunk declares");
          }
          hunk.lines.push_back({LineTag::Context, body.empty() ? "" : body.substr(1), true});
          --rem_old;
          --rem_new;
        } else {
          throw ParseError("line " + line_no + ": unrecognized hunk body line: " + body);
        }
        ++i;
      }
      if (i < lines.size() && !lines[i].empty() && lines[i][0] == '\\') {
        if (!hunk.lines.empty()) hunk.lines.back().has_newline = false;
        ++i;
      }
      diff.hunks.push_back(std::move(hunk));
    } else if (is_preamble_line(line)) {
      ++i;
    } else {
      throw ParseError("line " + std::to_string(i + 1) + ": unrecognized diff content: " + line);
    }
  }
  return diff;
}

EditDiff compute_diff(const std::string& before, const std::string& after, int context_lines) {
  if (context_lines < 0) throw ValidationError("context_lines must be >= 0");
  const std::vector<LineRec> a = split_line_recs(before);
  const std::vector<LineRec> b = split_line_recs(after);

  std::size_t prefix = 0;
  while (prefix < a.size() && prefix < b.size() && a[prefix] == b[prefix]) ++prefix;
  std::size_t suffix = 0;
  while (suffix < a.size() - prefix && suffix < b.size() - prefix &&
         a[a.size() - 1 - suffix] == b[b.size() - 1 - suffix]) {
    ++suffix;
  }

  Script script;
  script.ops.assign(prefix, 'k');
  Script middle = middle_script(a, prefix, a.size() - suffix, b, prefix, b.size() - suffix);
  script.ops += middle.ops;
  script.ops.append(suffix, 'k');
  canonicalize(script);

  const std::string& ops = script.ops;
  // Old/new 0-based positions before each op.
  std::vector<std::pair<long, long>> pos(ops.size() + 1);
  {
    long oi = 0, nj = 0;
    for (std::size_t idx = 0; idx < ops.size(); ++idx) {
      pos[idx] = {oi, nj};
      if (ops[idx] != 'a') ++oi;
      if (ops[idx] != 'd') ++nj;
    }
    pos[ops.size()] = {oi, nj};
  }

  // Maximal non-keep runs, widened by context and merged when they touch.
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  for (std::size_t idx = 0; idx < ops.size();) {
    if (ops[idx] == 'k') {
      ++idx;
      continue;
    }
    std::size_t end = idx;
    while (end < ops.size() && ops[end] != 'k') ++end;
    const std::size_t ctx = static_cast<std::size_t>(context_lines);
    std::size_t lo = idx >= ctx ? idx - ctx : 0;
    std::size_t hi = std::min(ops.size(), end + ctx);
    if (!spans.empty() && lo <= spans.back().second) {
      spans.back().second = hi;
    } else {
      spans.emplace_back(lo, hi);
    }
    idx = end;
  }

  EditDiff diff;
  for (const auto& [lo, hi] : spans) {
    DiffHunk hunk;
    for (std::size_t idx = lo; idx < hi; ++idx) {
      const auto [oi, nj] = pos[idx];
      switch (ops[idx]) {
        case 'k':
          hunk.lines.push_back({LineTag::Context, std::string(a[oi].text), a[oi].has_newline});
          ++hunk.old_count;
          ++hunk.new_count;
          break;
        case 'd':
          hunk.lines.push_back({LineTag::Deleted, std::string(a[oi].text), a[oi].has_newline});
          ++hunk.old_count;
          break;
        case 'a':
          hunk.lines.push_back({LineTag::Added, std::string(b[nj].text), b[nj].has_newline});
          ++hunk.new_count;
          break;
      }
    }
    hunk.old_start = hunk.old_count > 0 ? pos[lo].first + 1 : pos[lo].first;
    hunk.new_start = hunk.new_count > 0 ? pos[lo].second + 1 : pos[lo].second;
    diff.hunks.push_back(std::move(hunk));
  }
  diff.raw_text = serialize_hunks(diff.hunks);
  return diff;
}

std::string apply_diff(const std::string& before, const EditDiff& diff) {
  const std::vector<LineRec> old_lines = split_line_recs(before);
  std::vector<std::pair<std::string, bool>> out;
  std::size_t cursor = 0;

  for (std::size_t h = 0; h < diff.hunks.size(); ++h) {
    const DiffHunk& hunk = diff.hunks[h];
    const std::size_t target =
        hunk.old_count == 0 ? static_cast<std::size_t>(hunk.old_start)
                            : static_cast<std::size_t>(hunk.old_start) - 1;
    if (target < cursor || target > old_lines.size()) {
      throw ValidationError("diff does not apply: hunk " + std::to_string(h + 1) +
                            " targets old line " + std::to_string(hunk.old_start) +
                            " out of order or range");
    }
    for (; cursor < target; ++cursor) {
      out.emplace_back(std::string(old_lines[cursor].text), old_lines[cursor].has_newline);
    }
    for (const DiffLine& line : hunk.lines) {
      if (line.tag == LineTag::Added) {
        out.emplace_back(line.text, line.has_newline);
        continue;
      }
      if (cursor >= old_lines.size() || old_lines[cursor].text != line.text ||
          old_lines[cursor].has_newline != line.has_newline) {
        throw ValidationError("diff does not apply: hunk " + std::to_string(h + 1) +
                              " expects old line " + std::to_string(cursor + 1) + " to be \"" +
                              line.text + "\"");
      }
      if (line.tag == LineTag::Context) {
        out.emplace_back(std::string(old_lines[cursor].text), old_lines[cursor].has_newline);
      }
      ++cursor;
    }
  }
  for (; cursor < old_lines.size(); ++cursor) {
    out.emplace_back(std::string(old_lines[cursor].text), old_lines[cursor].has_newline);
  }

  std::string result;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!out[i].second && i + 1 != out.size()) {
      throw ValidationError("diff does not apply: unterminated line before end of file");
    }
    result += out[i].first;
    if (out[i].second) result.push_back('\n');
  }
  return result;
}

std::size_t diff_char_length(const EditDiff& diff) { return diff.raw_text.size(); }

bool diff_is_empty(const EditDiff& diff) { return diff.hunks.empty(); }

}  // namespace reprompt
