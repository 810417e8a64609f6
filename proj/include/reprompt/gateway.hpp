#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "reprompt/core.hpp"
#include "reprompt/metrics.hpp"

namespace reprompt {

// ---- requests and responses -----------------------------------------------------

enum class ModelRole { Edit, Analyze, Judge };

std::string model_role_str(ModelRole role);
ModelRole model_role_from_str(const std::string& name);  // throws ValidationError

struct ModelRequest {
  ModelRole role = ModelRole::Analyze;
  std::string system_text;
  std::string user_text;
  std::string context;  // empty = absent
  std::optional<CodeRegion> selection;
};

struct ModelResponse {
  std::string text;
  std::string backend_id;
  bool cached = false;
};

// Stable content digest over the five request fields; semantically identical
// requests always share a digest.
std::string request_digest(const ModelRequest& request);

// ---- error taxonomy ---------------------------------------------------------------

// Transient backend failure; the gateway retries these.
struct RetryableError : Error {
  using Error::Error;
};

// The model answered, but not in the required shape. raw preserves the reply.
struct DegradationError : Error {
  DegradationError(const std::string& message, std::string raw_text)
      : Error(message), raw(std::move(raw_text)) {}
  std::string raw;
};

struct JudgeParseError : Error {
  JudgeParseError(const std::string& message, std::string raw_text)
      : Error(message), raw(std::move(raw_text)) {}
  std::string raw;
};

// Strict-replay cache miss; names the digest that was not found.
struct ReplayMissError : Error {
  explicit ReplayMissError(const std::string& digest_value)
      : Error("replay cache miss for request digest " + digest_value), digest(digest_value) {}
  std::string digest;
};

// ---- backends ------------------------------------------------------------------------

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  virtual std::string id() const = 0;
  // Returns raw model text. Throws RetryableError on transient failure.
  virtual std::string complete(const ModelRequest& request) = 0;
};

// Scripted backend for tests and offline runs.
class MockBackend : public ModelBackend {
 public:
  using Handler = std::function<std::string(const ModelRequest&)>;
  explicit MockBackend(Handler handler, std::string backend_id = "mock");

  std::string id() const override { return id_; }
  std::string complete(const ModelRequest& request) override { return handler_(request); }

 private:
  Handler handler_;
  std::string id_;
};

// Deterministic offline backend: edits revise the selection's first line
// (or reproduce a diff smuggled in an APPLY64:<base64> token), analyses
// answer the error-analysis / enhancement / codebook-induction formats, and
// judgements score by normalized equality then gestalt similarity.
std::shared_ptr<ModelBackend> make_default_mock();

// JSON-over-HTTP backend: POST {role, system, user, context, selection} to
// endpoint, expecting {"text": ...}. Non-2xx and transport failures raise
// RetryableError.
class HttpBackend : public ModelBackend {
 public:
  HttpBackend(std::string endpoint, std::string api_key);
  std::string id() const override;
  std::string complete(const ModelRequest& request) override;

 private:
  std::string endpoint_;
  std::string api_key_;
};

// Builds a backend from an endpoint spec: "mock:" for the default mock,
// anything else as an HTTP base URL.
std::shared_ptr<ModelBackend> make_backend(const std::string& endpoint, const std::string& api_key);

// ---- the gateway -----------------------------------------------------------------------

enum class GatewayMode { Live, Record, Replay };

std::string gateway_mode_str(GatewayMode mode);
GatewayMode gateway_mode_from_str(const std::string& name);  // throws ValidationError

struct GatewayConfig {
  GatewayMode mode = GatewayMode::Replay;
  std::filesystem::path cache_path;  // required for Record/Replay
  int max_attempts = 3;
  int backoff_ms = 250;   // doubled per retry
  int parallelism = 4;    // bound on concurrent live calls
};

enum class JudgeVerdict { Equivalent, Partial, Different };

std::string judge_verdict_str(JudgeVerdict verdict);

struct JudgeResult {
  double score = 0.0;  // in [0, 1]
  JudgeVerdict verdict = JudgeVerdict::Different;
  std::string raw;
};

// Parses the fenced judge block ("score: <x>" / "verdict: <word>").
// Exposed for tests; throws JudgeParseError.
JudgeResult parse_judge_reply(const std::string& text);

// ---- reply-format helpers ---------------------------------------------------------

// Content of the first ``` fence in text, or nullopt when there is none.
// Only lines that start with ``` open or close a fence, so diff bodies that
// merely contain backticks cannot truncate the block.
std::optional<std::string> first_fenced_block(const std::string& text);

// Content of the first fence that follows a line starting with the given
// section label (case-insensitive). Used to pull labeled diffs back out of
// request and reply texts.
std::optional<std::string> fenced_block_after(const std::string& text, const std::string& label);

// Thread-safe model boundary with record/replay determinism.
class ModelGateway {
 public:
  ModelGateway(std::shared_ptr<ModelBackend> backend, GatewayConfig config);
  ~ModelGateway();

  ModelGateway(const ModelGateway&) = delete;
  ModelGateway& operator=(const ModelGateway&) = delete;

  // Mode dispatch: Replay serves only the cache (miss -> ReplayMissError);
  // Record serves cache hits and persists live responses; Live always calls.
  ModelResponse complete_request(const ModelRequest& request);

  std::string complete(ModelRole role, const std::string& system_text,
                       const std::string& user_text, const std::string& context = "",
                       std::optional<CodeRegion> selection = std::nullopt);

  // Asks for a unified diff over the context/selection. Unparseable output
  // raises DegradationError carrying the raw reply.
  EditDiff generate_edit(const Prompt& prompt, const std::string& context,
                         const CodeRegion& selection);

  JudgeResult judge(const std::string& original_prompt, const std::string& enhanced_prompt,
                    const EditDiff& candidate_diff, const EditDiff& desired_diff);
  SimilarityScore judge_similarity(const std::string& original_prompt,
                                   const std::string& enhanced_prompt,
                                   const EditDiff& candidate_diff, const EditDiff& desired_diff);

  // Whitespace-normalized equality of applied results, or judge verdict
  // "equivalent". The executable replication rule used by feasibility runs.
  bool replicates(const std::string& original_code, const EditDiff& candidate,
                  const EditDiff& desired, const std::string& original_prompt,
                  const std::string& enhanced_prompt);

  std::string backend_id() const;
  GatewayMode mode() const { return config_.mode; }
  std::size_t cache_size() const;

 private:
  struct CacheEntry {
    std::string text;
    std::string backend_id;
  };

  std::string call_with_retry(const ModelRequest& request);
  void load_cache();
  void append_cache_line(const std::string& digest, const ModelRole role,
                         const CacheEntry& entry);

  std::shared_ptr<ModelBackend> backend_;
  GatewayConfig config_;
  mutable std::mutex mutex_;           // guards cache_ and the cache file
  std::map<std::string, CacheEntry> cache_;
  std::unique_ptr<class Semaphore> in_flight_;  // bounds concurrent live calls
};

}  // namespace reprompt
