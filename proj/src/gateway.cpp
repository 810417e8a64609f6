#include "reprompt/gateway.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <thread>
#include <utility>

#include <httplib.h>
#include <json.hpp>

namespace reprompt {

using nlohmann::json;

// ---- enum conversions --------------------------------------------------------------

std::string model_role_str(ModelRole role) {
  switch (role) {
    case ModelRole::Edit: return "edit";
    case ModelRole::Analyze: return "analyze";
    case ModelRole::Judge: return "judge";
  }
  throw ValidationError("unknown model role");
}

ModelRole model_role_from_str(const std::string& name) {
  if (name == "edit") return ModelRole::Edit;
  if (name == "analyze") return ModelRole::Analyze;
  if (name == "judge") return ModelRole::Judge;
  throw ValidationError("unknown model role: " + name);
}

std::string gateway_mode_str(GatewayMode mode) {
  switch (mode) {
    case GatewayMode::Live: return "live";
    case GatewayMode::Record: return "record";
    case GatewayMode::Replay: return "replay";
  }
  throw ValidationError("unknown gateway mode");
}

GatewayMode gateway_mode_from_str(const std::string& name) {
  if (name == "live") return GatewayMode::Live;
  if (name == "record") return GatewayMode::Record;
  if (name == "replay") return GatewayMode::Replay;
  throw ValidationError("unknown gateway mode: " + name);
}

std::string judge_verdict_str(JudgeVerdict verdict) {
  switch (verdict) {
    case JudgeVerdict::Equivalent: return "equivalent";
    case JudgeVerdict::Partial: return "partial";
    case JudgeVerdict::Different: return "different";
  }
  throw ValidationError("unknown judge verdict");
}

// ---- digests -----------------------------------------------------------------------

std::string request_digest(const ModelRequest& request) {
  json payload;
  payload["role"] = model_role_str(request.role);
  payload["system"] = request.system_text;
  payload["user"] = request.user_text;
  payload["context"] = request.context;
  if (request.selection.has_value()) {
    payload["selection"] = {{"file", request.selection->file_id},
                            {"start", request.selection->start_line},
                            {"end", request.selection->end_line}};
  } else {
    payload["selection"] = nullptr;
  }
  return sha256_hex(payload.dump());
}

// ---- reply-format helpers ------------------------------------------------------------

namespace {

// Iterates text line by line without copying; the callback gets each line
// without its terminator.
template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::size_t pos = 0;
  while (pos <= text.size()) {
    if (pos == text.size()) {
      if (pos != 0) break;        // no trailing fragment after final \n
      fn(std::string_view{});     // empty text still has one empty line
      break;
    }
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      fn(std::string_view(text).substr(pos));
      break;
    }
    fn(std::string_view(text).substr(pos, nl - pos));
    pos = nl + 1;
  }
}

bool starts_with_fence(std::string_view line) {
  return line.substr(0, 3) == "```";
}

std::optional<std::string> fence_from(const std::string& text, std::size_t from_line) {
  std::vector<std::string_view> lines;
  for_each_line(text, [&](std::string_view line) { lines.push_back(line); });
  std::size_t i = from_line;
  while (i < lines.size() && !starts_with_fence(lines[i])) ++i;
  if (i >= lines.size()) return std::nullopt;
  std::string body;
  for (std::size_t j = i + 1; j < lines.size(); ++j) {
    if (starts_with_fence(lines[j])) return body;
    body.append(lines[j]);
    body.push_back('\n');
  }
  return std::nullopt;  // unterminated fence
}

}  // namespace

std::optional<std::string> first_fenced_block(const std::string& text) {
  return fence_from(text, 0);
}

std::optional<std::string> fenced_block_after(const std::string& text, const std::string& label) {
  std::vector<std::string_view> lines;
  for_each_line(text, [&](std::string_view line) { lines.push_back(line); });
  const std::string want = to_lower(label);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string lowered = to_lower(trim(lines[i]));
    if (lowered.rfind(want, 0) == 0) {
      return fence_from(text, i + 1);
    }
  }
  return std::nullopt;
}

// ---- judge reply parsing ---------------------------------------------------------------

JudgeResult parse_judge_reply(const std::string& text) {
  std::optional<double> score;
  std::optional<JudgeVerdict> verdict;
  for_each_line(text, [&](std::string_view line) {
    std::string lowered = to_lower(trim(line));
    if (!score.has_value() && lowered.rfind("score:", 0) == 0) {
      std::string value = trim(lowered.substr(6));
      try {
        std::size_t used = 0;
        double parsed = std::stod(value, &used);
        if (used == value.size() && std::isfinite(parsed)) score = parsed;
      } catch (const std::exception&) {
        // leave score unset; the checks below report the failure
      }
    }
    if (!verdict.has_value() && lowered.rfind("verdict:", 0) == 0) {
      std::string word = trim(lowered.substr(8));
      if (word == "equivalent") verdict = JudgeVerdict::Equivalent;
      else if (word == "partial") verdict = JudgeVerdict::Partial;
      else if (word == "different") verdict = JudgeVerdict::Different;
    }
  });
  if (!score.has_value()) throw JudgeParseError("judge reply has no parseable score line", text);
  if (*score < 0.0 || *score > 1.0)
    throw JudgeParseError("judge score outside [0, 1]", text);
  if (!verdict.has_value())
    throw JudgeParseError("judge reply has no recognized verdict line", text);
  return JudgeResult{*score, *verdict, text};
}

// ---- backends -------------------------------------------------------------------------

MockBackend::MockBackend(Handler handler, std::string backend_id)
    : handler_(std::move(handler)), id_(std::move(backend_id)) {
  if (!handler_) throw ValidationError("mock backend requires a handler");
}

namespace {

constexpr std::string_view kApplyToken = "APPLY64:";

// Pulls the base64 payload of an APPLY64 token out of a prompt, if present.
std::optional<std::string> apply_token_payload(const std::string& text) {
  std::size_t at = text.find(kApplyToken);
  if (at == std::string::npos) return std::nullopt;
  std::size_t begin = at + kApplyToken.size();
  std::size_t end = begin;
  while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
  try {
    return base64_decode(std::string_view(text).substr(begin, end - begin));
  } catch (const ParseError&) {
    return std::nullopt;  // malformed token: treat as absent
  }
}

// Appends marker to line `line_no` (1-based, clamped to the last line).
std::string revise_line(const std::string& text, int line_no, const std::string& marker) {
  std::size_t pos = 0;
  for (int line = 1; line < line_no; ++line) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos || nl + 1 >= text.size()) break;
    pos = nl + 1;
  }
  std::size_t end = text.find('\n', pos);
  if (end == std::string::npos) end = text.size();
  return text.substr(0, end) + marker + text.substr(end);
}

std::string first_words(const std::string& text, std::size_t limit) {
  std::string out;
  std::size_t words = 0;
  std::size_t i = 0;
  while (i < text.size() && words < limit) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) break;
    if (!out.empty()) out.push_back(' ');
    out.append(text, start, i - start);
    ++words;
  }
  return out;
}

// First line following a "<label>" line, for pulling the original prompt back
// out of an analysis request.
std::string line_after_label(const std::string& text, const std::string& label) {
  std::vector<std::string> lines = split(text, '\n');
  const std::string want = to_lower(label);
  for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
    if (to_lower(trim(lines[i])).rfind(want, 0) == 0) return trim(lines[i + 1]);
  }
  return "";
}

std::string mock_edit_reply(const ModelRequest& request) {
  if (auto smuggled = apply_token_payload(request.user_text)) return *smuggled;
  if (request.context.empty()) return "";
  int line_no = request.selection.has_value() ? request.selection->start_line : 1;
  std::string marker = "  // revised " + sha256_hex(request.user_text).substr(0, 8);
  std::string after = revise_line(request.context, line_no, marker);
  return compute_diff(request.context, after).raw_text;
}

std::string mock_error_analysis_reply(const ModelRequest& request) {
  auto golden = fenced_block_after(request.user_text, "Golden Response Diff");
  std::string improved;
  if (golden.has_value()) {
    improved = "Apply exactly this edit: " + std::string(kApplyToken) + base64_encode(*golden);
  } else {
    improved = "Revise the selected lines exactly as the desired edit requires.";
  }
  return "## Diff Analysis\n"
         "The candidate edit and the desired edit disagree inside the selected region.\n"
         "\n"
         "## Missing Specification\n"
         "- The prompt does not pin down the exact replacement lines for the selection.\n"
         "\n"
         "## Improved Prompt\n" +
         improved +
         "\n"
         "\n"
         "## Request for More Information\n";
}

std::string mock_enhancement_reply(const ModelRequest& request) {
  if (auto golden = fenced_block_after(request.user_text, "Desired Final Code Edit")) {
    return "## Identified Missing Specifications\n"
           "- Specifics\n"
           "\n"
           "## Improved Prompts\n"
           "1. [Specifics] Apply exactly this edit: " +
           std::string(kApplyToken) + base64_encode(*golden) +
           "\n"
           "\n"
           "## Recommended Prompt\n"
           "1\n"
           "\n"
           "## Request for More Information\n";
  }
  std::string stub = first_words(line_after_label(request.user_text, "Current Prompt:"), 6);
  if (stub.empty()) stub = "Revise the selected lines";
  return "## Identified Missing Specifications\n"
         "- Specifics\n"
         "- User Intent\n"
         "\n"
         "## Improved Prompts\n"
         "1. [Specifics] " + stub + " and name the exact values the selected lines must contain.\n"
         "2. [User Intent] " + stub + " and state the goal so the edit matches the intended behavior.\n"
         "3. [Localization/Scope] " + stub + " and keep the change inside the selected lines only.\n"
         "\n"
         "## Recommended Prompt\n"
         "3\n"
         "\n"
         "## Request for More Information\n";
}

std::string mock_codebook_reply() {
  return "| Category | Description |\n"
         "| --- | --- |\n"
         "| Missing Context | The prompt lacks necessary background information or surrounding"
         " code context to understand the intended functionality or modification. |\n"
         "| Missing Action | The prompt does not clearly specify what action needs to be taken"
         " or the specific operation to be performed. |\n"
         "| Missing Object/Target | The prompt does not clearly identify the target of the"
         " action, such as variables, functions, classes, or files. |\n"
         "| Missing Value/Specification | The prompt lacks detail about a required value, such"
         " as constants, data types, strings, paths, or parameter types. |\n"
         "| Missing Logic/Condition | The prompt does not specify the conditional logic or"
         " control flow under which code should execute or behave. |\n"
         "| Missing Style/Format | The prompt does not specify desired coding style, formatting"
         " preferences, or response presentation. |\n"
         "| Missing Import/Dependency | The prompt fails to specify necessary imports, includes,"
         " or build dependencies required for the code to function. |\n";
}

std::string mock_judge_reply(const ModelRequest& request) {
  if (request.user_text.find("Candidates:") != std::string::npos) return "choice: 1";
  std::string candidate = fenced_block_after(request.user_text, "Candidate Edit").value_or("");
  std::string desired = fenced_block_after(request.user_text, "Desired Edit").value_or("");
  double score = 0.0;
  std::string verdict = "different";
  if (collapse_ws(candidate) == collapse_ws(desired)) {
    score = 1.0;
    verdict = "equivalent";
  } else {
    score = gestalt(candidate, desired).value;
    verdict = score >= 0.5 ? "partial" : "different";
  }
  char line[64];
  std::snprintf(line, sizeof(line), "score: %.6f", score);
  return "```\n" + std::string(line) + "\nverdict: " + verdict + "\n```\n";
}

}  // namespace

std::shared_ptr<ModelBackend> make_default_mock() {
  return std::make_shared<MockBackend>(
      [](const ModelRequest& request) -> std::string {
        switch (request.role) {
          case ModelRole::Edit:
            return mock_edit_reply(request);
          case ModelRole::Analyze: {
            if (request.system_text.find("Golden Response Diff") != std::string::npos)
              return mock_error_analysis_reply(request);
            if (request.system_text.find("Generate Improved Prompts") != std::string::npos)
              return mock_enhancement_reply(request);
            if (request.system_text.find("codebook") != std::string::npos)
              return mock_codebook_reply();
            if (request.system_text.find("Shorten") != std::string::npos)
              return first_words(request.user_text, 40);
            return "ok";
          }
          case ModelRole::Judge:
            return mock_judge_reply(request);
        }
        throw ValidationError("unknown model role");
      },
      "mock");
}

HttpBackend::HttpBackend(std::string endpoint, std::string api_key)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)) {
  if (endpoint_.empty()) throw ValidationError("http backend requires an endpoint");
}

std::string HttpBackend::id() const { return "http:" + endpoint_; }

std::string HttpBackend::complete(const ModelRequest& request) {
  httplib::Client client(endpoint_);
  client.set_connection_timeout(5, 0);
  client.set_read_timeout(60, 0);

  json payload;
  payload["role"] = model_role_str(request.role);
  payload["system"] = request.system_text;
  payload["user"] = request.user_text;
  payload["context"] = request.context;
  if (request.selection.has_value()) {
    payload["selection"] = {{"file", request.selection->file_id},
                            {"start", request.selection->start_line},
                            {"end", request.selection->end_line}};
  }

  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  auto result = client.Post("/complete", headers, payload.dump(), "application/json");
  if (!result) {
    throw RetryableError("transport failure reaching " + endpoint_ + ": " +
                         httplib::to_string(result.error()));
  }
  if (result->status < 200 || result->status >= 300) {
    throw RetryableError("backend " + endpoint_ + " answered status " +
                         std::to_string(result->status));
  }
  try {
    json reply = json::parse(result->body);
    return reply.at("text").get<std::string>();
  } catch (const json::exception& e) {
    throw RetryableError("backend reply is not {\"text\": ...}: " + std::string(e.what()));
  }
}

std::shared_ptr<ModelBackend> make_backend(const std::string& endpoint,
                                           const std::string& api_key) {
  if (endpoint.empty()) throw ValidationError("no model endpoint configured");
  if (endpoint.rfind("mock:", 0) == 0) return make_default_mock();
  return std::make_shared<HttpBackend>(endpoint, api_key);
}

// ---- gateway ------------------------------------------------------------------------------

// Counting semaphore over a runtime bound. std::counting_semaphore fixes its
// ceiling at compile time, hence this small hand-rolled one.
class Semaphore {
 public:
  explicit Semaphore(int count) : count_(count) {}

  void acquire() {
    std::unique_lock lock(mutex_);
    ready_.wait(lock, [&] { return count_ > 0; });
    --count_;
  }

  void release() {
    {
      std::lock_guard lock(mutex_);
      ++count_;
    }
    ready_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable ready_;
  int count_;
};

namespace {

struct SemaphoreGuard {
  explicit SemaphoreGuard(Semaphore& sem) : sem_(sem) { sem_.acquire(); }
  ~SemaphoreGuard() { sem_.release(); }
  SemaphoreGuard(const SemaphoreGuard&) = delete;
  SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;
  Semaphore& sem_;
};

const char* kEditSystem =
    "You are a precise code-editing assistant. Apply the user's instruction to the"
    " provided code and reply with a single zero-context unified diff (@@ -a,b +c,d @@"
    " hunks) that transforms the provided code. Reply with the diff only, no prose.";

const char* kJudgeSystem =
    "You are an impartial judge of code edits. Compare the candidate edit against the"
    " desired edit, in the light of the prompts that produced them. Reply inside a"
    " fenced block with exactly two lines: 'score: <number between 0 and 1>' and"
    " 'verdict: <equivalent|partial|different>'.";

std::string fence_diff(const std::string& raw_text) {
  std::string body = raw_text;
  if (!body.empty() && body.back() != '\n') body.push_back('\n');
  return "```diff\n" + body + "```\n";
}

}  // namespace

ModelGateway::ModelGateway(std::shared_ptr<ModelBackend> backend, GatewayConfig config)
    : backend_(std::move(backend)), config_(std::move(config)) {
  if (config_.max_attempts < 1) throw ValidationError("max_attempts must be at least 1");
  if (config_.backoff_ms < 0) throw ValidationError("backoff_ms must not be negative");
  if (config_.parallelism < 1) throw ValidationError("parallelism must be at least 1");
  if (config_.mode != GatewayMode::Replay && backend_ == nullptr)
    throw ValidationError("live and record modes require a backend");
  if (config_.mode != GatewayMode::Live && config_.cache_path.empty())
    throw ValidationError("record and replay modes require a cache path");
  if (config_.mode == GatewayMode::Replay && !std::filesystem::exists(config_.cache_path))
    throw IoError("replay cache not found: " + config_.cache_path.string());
  in_flight_ = std::make_unique<Semaphore>(config_.parallelism);
  if (config_.mode != GatewayMode::Live) load_cache();
}

ModelGateway::~ModelGateway() = default;

void ModelGateway::load_cache() {
  if (!std::filesystem::exists(config_.cache_path)) return;  // record mode creates it lazily
  std::string content = read_file(config_.cache_path);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) nl = content.size();
    std::string line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      json record = json::parse(line);
      cache_[record.at("digest").get<std::string>()] =
          CacheEntry{record.at("text").get<std::string>(),
                     record.at("backend_id").get<std::string>()};
    } catch (const json::exception& e) {
      throw ParseError(config_.cache_path.string() + ":" + std::to_string(line_no) + ": " +
                       e.what());
    }
  }
}

void ModelGateway::append_cache_line(const std::string& digest, const ModelRole role,
                                     const CacheEntry& entry) {
  std::ofstream out(config_.cache_path, std::ios::app | std::ios::binary);
  if (!out) throw IoError("cannot open cache for append: " + config_.cache_path.string());
  json record;
  record["digest"] = digest;
  record["role"] = model_role_str(role);
  record["text"] = entry.text;
  record["backend_id"] = entry.backend_id;
  out << record.dump() << '\n';
  if (!out) throw IoError("cannot write cache line: " + config_.cache_path.string());
}

std::string ModelGateway::call_with_retry(const ModelRequest& request) {
  SemaphoreGuard guard(*in_flight_);
  int attempt = 1;
  while (true) {
    try {
      return backend_->complete(request);
    } catch (const RetryableError&) {
      if (attempt >= config_.max_attempts) throw;
      auto delay = std::chrono::milliseconds(
          static_cast<long long>(config_.backoff_ms) << (attempt - 1));
      if (delay.count() > 0) std::this_thread::sleep_for(delay);
      ++attempt;
    }
  }
}

ModelResponse ModelGateway::complete_request(const ModelRequest& request) {
  if (request.role != ModelRole::Edit && trim(request.system_text).empty())
    throw ValidationError("analyze and judge requests require a system text");
  const std::string digest = request_digest(request);

  if (config_.mode == GatewayMode::Replay) {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(digest);
    if (it == cache_.end()) throw ReplayMissError(digest);
    return ModelResponse{it->second.text, it->second.backend_id, true};
  }

  if (config_.mode == GatewayMode::Record) {
    {
      std::lock_guard lock(mutex_);
      auto it = cache_.find(digest);
      if (it != cache_.end()) return ModelResponse{it->second.text, it->second.backend_id, true};
    }
    std::string text = call_with_retry(request);
    std::lock_guard lock(mutex_);
    auto [it, inserted] = cache_.emplace(digest, CacheEntry{text, backend_->id()});
    if (inserted) append_cache_line(digest, request.role, it->second);
    return ModelResponse{it->second.text, it->second.backend_id, false};
  }

  return ModelResponse{call_with_retry(request), backend_->id(), false};
}

std::string ModelGateway::complete(ModelRole role, const std::string& system_text,
                                   const std::string& user_text, const std::string& context,
                                   std::optional<CodeRegion> selection) {
  ModelRequest request{role, system_text, user_text, context, std::move(selection)};
  return complete_request(request).text;
}

EditDiff ModelGateway::generate_edit(const Prompt& prompt, const std::string& context,
                                     const CodeRegion& selection) {
  validate_prompt(prompt);
  ModelRequest request{ModelRole::Edit, kEditSystem, prompt.text, context, selection};
  const std::string reply = complete_request(request).text;
  std::string candidate = first_fenced_block(reply).value_or(reply);
  try {
    return parse_unified_diff(normalize_newlines(candidate));
  } catch (const ParseError& e) {
    throw DegradationError("model reply is not a unified diff: " + std::string(e.what()), reply);
  }
}

JudgeResult ModelGateway::judge(const std::string& original_prompt,
                                const std::string& enhanced_prompt,
                                const EditDiff& candidate_diff, const EditDiff& desired_diff) {
  std::string user_text = "Original Prompt:\n" + original_prompt +
                          "\n\nEnhanced Prompt:\n" + enhanced_prompt +
                          "\n\nCandidate Edit:\n" + fence_diff(candidate_diff.raw_text) +
                          "\nDesired Edit:\n" + fence_diff(desired_diff.raw_text);
  return parse_judge_reply(complete(ModelRole::Judge, kJudgeSystem, user_text));
}

SimilarityScore ModelGateway::judge_similarity(const std::string& original_prompt,
                                               const std::string& enhanced_prompt,
                                               const EditDiff& candidate_diff,
                                               const EditDiff& desired_diff) {
  JudgeResult result = judge(original_prompt, enhanced_prompt, candidate_diff, desired_diff);
  return SimilarityScore{result.score, MetricName::Autorater};
}

bool ModelGateway::replicates(const std::string& original_code, const EditDiff& candidate,
                              const EditDiff& desired, const std::string& original_prompt,
                              const std::string& enhanced_prompt) {
  try {
    std::string candidate_applied = apply_diff(original_code, candidate);
    std::string desired_applied = apply_diff(original_code, desired);
    if (collapse_ws(candidate_applied) == collapse_ws(desired_applied)) return true;
  } catch (const Error&) {
    // fall through to the judge when either diff fails to apply
  }
  return judge(original_prompt, enhanced_prompt, candidate, desired).verdict ==
         JudgeVerdict::Equivalent;
}

std::string ModelGateway::backend_id() const {
  if (config_.mode == GatewayMode::Replay)
    return "replay(" + (backend_ ? backend_->id() : std::string("cache")) + ")";
  return backend_->id();
}

std::size_t ModelGateway::cache_size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

}  // namespace reprompt
