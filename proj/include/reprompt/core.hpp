#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "reprompt/util.hpp"

namespace reprompt {

// ---- regions -------------------------------------------------------------------

// Contiguous 1-based inclusive line range inside one file.
struct CodeRegion {
  std::string file_id;
  int start_line = 1;
  int end_line = 1;
};

// Throws ValidationError unless 1 <= start_line <= end_line.
CodeRegion make_region(std::string file_id, int start_line, int end_line);

// Line distance between the nearest boundaries of two regions. 0 when they
// overlap or touch-as-overlap; nullopt when the regions live in different
// files and are therefore incomparable.
std::optional<int> region_line_gap(const CodeRegion& a, const CodeRegion& b);

// ---- prompts and snapshots --------------------------------------------------------

struct Prompt {
  std::string text;
  std::string author_id;
  std::int64_t ts = 0;  // UTC seconds
};

// Throws ValidationError when the trimmed text is empty.
void validate_prompt(const Prompt& prompt);

struct CodeSnapshot {
  std::string file_id;
  std::int64_t ts = 0;  // UTC seconds
  std::string content;
};

// Periodic file snapshots, on disk as <root>/<file_id>/<unix_ts>.txt.
class SnapshotStore {
 public:
  SnapshotStore() = default;

  // Scans an on-disk store. Throws IoError when root is not a directory.
  static SnapshotStore open(const std::filesystem::path& root);

  void add(CodeSnapshot snapshot);

  // Earliest snapshot of file_id with timestamp >= ts.
  std::optional<CodeSnapshot> first_at_or_after(const std::string& file_id,
                                                std::int64_t ts) const;

  void save(const std::filesystem::path& root) const;

  std::size_t size() const;

 private:
  std::map<std::string, std::map<std::int64_t, std::string>> by_file_;
};

// ---- diffs ----------------------------------------------------------------------

enum class LineTag { Context, Added, Deleted };

struct DiffLine {
  LineTag tag = LineTag::Context;
  std::string text;        // without trailing newline
  bool has_newline = true; // false only for a file's final unterminated line
};

struct DiffHunk {
  long old_start = 0;  // 1-based; 0 only for insertions into an empty old side
  long old_count = 0;
  long new_start = 0;
  long new_count = 0;
  std::vector<DiffLine> lines;
};

// A zero-context unified diff. raw_text is the serialized form: the parser
// preserves its input byte for byte, compute_diff emits the canonical
// rendering of its hunks.
struct EditDiff {
  std::vector<DiffHunk> hunks;
  std::string raw_text;
};

// Parses unified-diff text. "" yields an empty diff with zero hunks. Any
// malformed hunk header or unrecognized body line raises ParseError naming
// the offending 1-based line.
EditDiff parse_unified_diff(const std::string& text);

// Canonical rendering: explicit "-a,b +c,d" counts, "\ No newline at end of
// file" markers after unterminated lines.
std::string serialize_hunks(const std::vector<DiffHunk>& hunks);

// Line-based diff such that apply_diff(before, result) == after, byte for
// byte. context_lines controls how many unchanged lines pad each hunk
// (default zero).
EditDiff compute_diff(const std::string& before, const std::string& after,
                      int context_lines = 0);

// Applies a diff produced by compute_diff or parsed from text. Context and
// deleted lines must match the input exactly; mismatches raise ParseError.
std::string apply_diff(const std::string& before, const EditDiff& diff);

// Character length of the serialized diff; the measure behind the
// "diff too long" dataset filter.
std::size_t diff_char_length(const EditDiff& diff);

bool diff_is_empty(const EditDiff& diff);

}  // namespace reprompt
