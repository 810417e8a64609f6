#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace reprompt {

// Base error for everything the pipeline can reject. Subtypes exist so
// callers can map failures to exit codes without string matching.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input text: diffs, JSONL records, model output sections.
struct ParseError : Error {
  using Error::Error;
};

// Structurally valid input that violates a contract (bad config values,
// impossible synthesis rates, labels outside the allowed set, ...).
struct ValidationError : Error {
  using Error::Error;
};

// Filesystem problems: missing files, unreadable stores, write failures.
struct IoError : Error {
  using Error::Error;
};

// ---- text helpers ----------------------------------------------------------

// Converts \r\n and bare \r to \n. Applied once at ingestion; everything
// downstream assumes \n-separated text.
std::string normalize_newlines(std::string_view text);

std::string trim(std::string_view text);
std::string trim_trailing_ws(std::string_view text);
std::string to_lower(std::string_view text);

// Collapses every whitespace run to a single space and trims the ends.
// This is the "whitespace-normalized" equality used by filters and the
// replication rule.
std::string collapse_ws(std::string_view text);

std::size_t word_count(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);

// ---- digests ----------------------------------------------------------------

// Lowercase hex SHA-256. Used for request digests, dataset provenance and
// replay-cache keys; must stay stable across runs and platforms.
std::string sha256_hex(std::string_view data);

// Standard base64 with padding.
std::string base64_encode(std::string_view data);
std::string base64_decode(std::string_view encoded);  // throws ParseError

// ---- filesystem -------------------------------------------------------------

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// ---- deterministic randomness ------------------------------------------------

// Thin wrapper over mt19937_64 that avoids std distribution objects, whose
// output is implementation-defined. Everything seeded through Rng is
// reproducible across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Unbiased integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  // Double in [0, 1) with 53 bits of entropy.
  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace reprompt
