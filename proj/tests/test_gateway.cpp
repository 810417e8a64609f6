#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "reprompt/gateway.hpp"
#include "reprompt/metrics.hpp"

using namespace reprompt;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("reprompt_gateway_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

ModelRequest mk_request(ModelRole role, const std::string& user) {
  ModelRequest request;
  request.role = role;
  request.system_text = "system text";
  request.user_text = user;
  return request;
}

const std::string kContext =
    "def scale(values, factor):\n"
    "    total = 0\n"
    "    for v in values:\n"
    "        total += v * factor\n"
    "    return total\n";

GatewayConfig live_config() {
  GatewayConfig config;
  config.mode = GatewayMode::Live;
  config.backoff_ms = 0;
  return config;
}

}  // namespace

TEST_CASE("role, mode and verdict names round-trip") {
  for (ModelRole role : {ModelRole::Edit, ModelRole::Analyze, ModelRole::Judge})
    CHECK(model_role_from_str(model_role_str(role)) == role);
  for (GatewayMode mode : {GatewayMode::Live, GatewayMode::Record, GatewayMode::Replay})
    CHECK(gateway_mode_from_str(gateway_mode_str(mode)) == mode);
  CHECK(judge_verdict_str(JudgeVerdict::Partial) == "partial");
  CHECK_THROWS_AS(model_role_from_str("editor"), ValidationError);
  CHECK_THROWS_AS(gateway_mode_from_str("cached"), ValidationError);
}

TEST_CASE("request digest is stable and covers every field") {
  ModelRequest base = mk_request(ModelRole::Analyze, "hello");
  base.context = "ctx";
  base.selection = make_region("a.py", 3, 5);

  const std::string digest = request_digest(base);
  CHECK(digest.size() == 64);
  CHECK(digest.find_first_not_of("0123456789abcdef") == std::string::npos);
  CHECK(request_digest(base) == digest);

  auto differs = [&](ModelRequest changed) { CHECK(request_digest(changed) != digest); };
  {
    ModelRequest r = base;
    r.role = ModelRole::Judge;
    differs(r);
  }
  {
    ModelRequest r = base;
    r.system_text += "!";
    differs(r);
  }
  {
    ModelRequest r = base;
    r.user_text += "!";
    differs(r);
  }
  {
    ModelRequest r = base;
    r.context = "";
    differs(r);
  }
  {
    ModelRequest r = base;
    r.selection = make_region("b.py", 3, 5);
    differs(r);
  }
  {
    ModelRequest r = base;
    r.selection->end_line = 6;
    differs(r);
  }
  {
    ModelRequest r = base;
    r.selection.reset();
    differs(r);
  }
}

TEST_CASE("fenced block helpers pull labeled sections") {
  const std::string text =
      "Candidate Edit:\n"
      "```diff\n"
      "@@ -1,1 +1,1 @@\n"
      "-a\n"
      "+b\n"
      "```\n"
      "\n"
      "Desired Edit:\n"
      "```diff\n"
      "@@ -1,1 +1,1 @@\n"
      "-a\n"
      "+c\n"
      "```\n";
  CHECK(first_fenced_block(text).value() == "@@ -1,1 +1,1 @@\n-a\n+b\n");
  CHECK(fenced_block_after(text, "Desired Edit").value() == "@@ -1,1 +1,1 @@\n-a\n+c\n");
  CHECK(fenced_block_after(text, "desired edit").has_value());  // case-insensitive
  CHECK_FALSE(fenced_block_after(text, "Golden Response Diff").has_value());
  CHECK_FALSE(first_fenced_block("no fences here").has_value());
  CHECK_FALSE(first_fenced_block("```\nunterminated\n").has_value());
  // a +``` body line neither opens nor closes a fence
  const std::string tricky = "```diff\n+```\n-x\n```\n";
  CHECK(first_fenced_block(tricky).value() == "+```\n-x\n");
}

TEST_CASE("judge reply parsing accepts the fenced two-line format") {
  JudgeResult plain = parse_judge_reply("score: 0.7\nverdict: partial");
  CHECK(plain.score == 0.7);
  CHECK(plain.verdict == JudgeVerdict::Partial);
  CHECK(plain.raw == "score: 0.7\nverdict: partial");

  JudgeResult fenced = parse_judge_reply(
      "The edits match closely.\n```\nScore: 1\nVERDICT: Equivalent\n```\n");
  CHECK(fenced.score == 1.0);
  CHECK(fenced.verdict == JudgeVerdict::Equivalent);

  CHECK(parse_judge_reply("score: 0\nverdict: different").score == 0.0);

  CHECK_THROWS_AS(parse_judge_reply("score: 1.5\nverdict: partial"), JudgeParseError);
  CHECK_THROWS_AS(parse_judge_reply("score: -0.1\nverdict: partial"), JudgeParseError);
  CHECK_THROWS_AS(parse_judge_reply("score: great\nverdict: partial"), JudgeParseError);
  CHECK_THROWS_AS(parse_judge_reply("verdict: partial"), JudgeParseError);
  CHECK_THROWS_AS(parse_judge_reply("score: 0.5"), JudgeParseError);
  CHECK_THROWS_AS(parse_judge_reply("score: 0.5\nverdict: maybe"), JudgeParseError);
  CHECK_THROWS_AS(parse_judge_reply(""), JudgeParseError);

  try {
    parse_judge_reply("score: oops\nverdict: partial");
    FAIL("expected JudgeParseError");
  } catch (const JudgeParseError& e) {
    CHECK(e.raw == "score: oops\nverdict: partial");
  }
}

TEST_CASE("live mode calls the backend every time") {
  int calls = 0;
  auto backend = std::make_shared<MockBackend>([&](const ModelRequest& request) {
    ++calls;
    return "reply to " + request.user_text;
  });
  ModelGateway gateway(backend, live_config());

  ModelResponse first = gateway.complete_request(mk_request(ModelRole::Analyze, "one"));
  CHECK(first.text == "reply to one");
  CHECK(first.backend_id == "mock");
  CHECK_FALSE(first.cached);
  gateway.complete_request(mk_request(ModelRole::Analyze, "one"));
  CHECK(calls == 2);
  CHECK(gateway.cache_size() == 0);
  CHECK(gateway.backend_id() == "mock");
}

TEST_CASE("record serves cache hits and replay reproduces recorded replies") {
  TempDir dir("record_replay");
  const fs::path cache = dir.path / "cache.jsonl";

  int calls = 0;
  auto backend = std::make_shared<MockBackend>(
      [&](const ModelRequest& request) {
        ++calls;
        return "reply:" + request.user_text;
      },
      "scripted");

  GatewayConfig record;
  record.mode = GatewayMode::Record;
  record.cache_path = cache;

  ModelRequest one = mk_request(ModelRole::Analyze, "one");
  ModelRequest two = mk_request(ModelRole::Analyze, "two");

  {
    ModelGateway gateway(backend, record);
    CHECK(gateway.complete_request(one).text == "reply:one");
    CHECK(gateway.complete_request(two).text == "reply:two");
    ModelResponse again = gateway.complete_request(one);
    CHECK(again.text == "reply:one");
    CHECK(again.cached);
    CHECK(calls == 2);
    CHECK(gateway.cache_size() == 2);
  }

  // the persisted cache is JSONL with one record per distinct request
  {
    std::ifstream in(cache);
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) {
      json record_line = json::parse(line);
      CHECK(record_line.at("backend_id") == "scripted");
      CHECK(record_line.count("digest") == 1);
      CHECK(record_line.count("role") == 1);
      CHECK(record_line.count("text") == 1);
      ++lines;
    }
    CHECK(lines == 2);
  }

  GatewayConfig replay;
  replay.mode = GatewayMode::Replay;
  replay.cache_path = cache;

  ModelGateway offline(nullptr, replay);
  ModelResponse served = offline.complete_request(one);
  CHECK(served.text == "reply:one");
  CHECK(served.backend_id == "scripted");
  CHECK(served.cached);
  CHECK(offline.complete_request(two).text == "reply:two");
  CHECK(offline.backend_id() == "replay(cache)");
  CHECK(calls == 2);  // replay never touched a backend

  ModelRequest three = mk_request(ModelRole::Analyze, "three");
  try {
    offline.complete_request(three);
    FAIL("expected ReplayMissError");
  } catch (const ReplayMissError& e) {
    CHECK(e.digest == request_digest(three));
    CHECK(std::string(e.what()).find(e.digest) != std::string::npos);
  }

  // a second recording pass over the same requests reuses the cache untouched
  {
    ModelGateway gateway(backend, record);
    gateway.complete_request(one);
    gateway.complete_request(two);
    CHECK(calls == 2);
  }
}

TEST_CASE("gateway construction validates its configuration") {
  TempDir dir("config");
  GatewayConfig config;
  config.mode = GatewayMode::Replay;
  config.cache_path = dir.path / "missing.jsonl";
  CHECK_THROWS_AS(ModelGateway(nullptr, config), IoError);

  config.mode = GatewayMode::Record;
  CHECK_THROWS_AS(ModelGateway(nullptr, config), ValidationError);  // needs a backend

  auto backend = make_default_mock();
  GatewayConfig no_cache;
  no_cache.mode = GatewayMode::Record;
  CHECK_THROWS_AS(ModelGateway(backend, no_cache), ValidationError);

  GatewayConfig bad = live_config();
  bad.max_attempts = 0;
  CHECK_THROWS_AS(ModelGateway(backend, bad), ValidationError);
  bad = live_config();
  bad.parallelism = 0;
  CHECK_THROWS_AS(ModelGateway(backend, bad), ValidationError);

  // record mode with a fresh path starts empty and creates the file on use
  GatewayConfig fresh;
  fresh.mode = GatewayMode::Record;
  fresh.cache_path = dir.path / "fresh.jsonl";
  ModelGateway gateway(backend, fresh);
  CHECK(gateway.cache_size() == 0);
  gateway.complete(ModelRole::Analyze, "codebook induction", "table please");
  CHECK(fs::exists(fresh.cache_path));
}

TEST_CASE("a malformed cache line is rejected with its location") {
  TempDir dir("badcache");
  const fs::path cache = dir.path / "cache.jsonl";
  {
    std::ofstream out(cache);
    out << R"({"digest":"d1","role":"analyze","text":"t","backend_id":"b"})" << "\n";
    out << "{not json\n";
  }
  GatewayConfig config;
  config.mode = GatewayMode::Replay;
  config.cache_path = cache;
  try {
    ModelGateway gateway(nullptr, config);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("cache.jsonl:2") != std::string::npos);
  }
}

TEST_CASE("retryable failures are retried with bounded attempts") {
  int calls = 0;
  auto flaky = std::make_shared<MockBackend>([&](const ModelRequest&) -> std::string {
    ++calls;
    if (calls < 3) throw RetryableError("transient");
    return "finally";
  });

  GatewayConfig config = live_config();
  config.max_attempts = 3;
  config.backoff_ms = 1;
  ModelGateway gateway(flaky, config);
  CHECK(gateway.complete(ModelRole::Analyze, "sys", "user") == "finally");
  CHECK(calls == 3);

  calls = 0;
  auto dead = std::make_shared<MockBackend>([&](const ModelRequest&) -> std::string {
    ++calls;
    throw RetryableError("still down");
  });
  GatewayConfig two = live_config();
  two.max_attempts = 2;
  two.backoff_ms = 0;
  ModelGateway hopeless(dead, two);
  CHECK_THROWS_AS(hopeless.complete(ModelRole::Analyze, "sys", "user"), RetryableError);
  CHECK(calls == 2);

  // non-transient errors propagate without retry
  calls = 0;
  auto broken = std::make_shared<MockBackend>([&](const ModelRequest&) -> std::string {
    ++calls;
    throw ValidationError("bad request shape");
  });
  ModelGateway strict(broken, live_config());
  CHECK_THROWS_AS(strict.complete(ModelRole::Analyze, "sys", "user"), ValidationError);
  CHECK(calls == 1);
}

TEST_CASE("analyze and judge requests require a system text") {
  ModelGateway gateway(make_default_mock(), live_config());
  CHECK_THROWS_AS(gateway.complete(ModelRole::Analyze, "", "user"), ValidationError);
  CHECK_THROWS_AS(gateway.complete(ModelRole::Judge, "  \n", "user"), ValidationError);
  CHECK_NOTHROW(gateway.complete(ModelRole::Edit, "", "+1"));
}

TEST_CASE("generate_edit parses diff replies and degrades on prose") {
  const CodeRegion selection = make_region("m.py", 2, 2);
  Prompt prompt{"double the total", "u1", 100};

  SUBCASE("a bare diff reply applies") {
    EditDiff expected = compute_diff(kContext, "def scale(values, factor):\n"
                                               "    total = 1\n"
                                               "    for v in values:\n"
                                               "        total += v * factor\n"
                                               "    return total\n");
    auto backend = std::make_shared<MockBackend>(
        [&](const ModelRequest&) { return expected.raw_text; });
    ModelGateway gateway(backend, live_config());
    EditDiff got = gateway.generate_edit(prompt, kContext, selection);
    CHECK(got.raw_text == expected.raw_text);
    CHECK(apply_diff(kContext, got) == apply_diff(kContext, expected));
  }

  SUBCASE("a fenced diff reply is unwrapped first") {
    EditDiff expected = compute_diff(kContext, "");
    auto backend = std::make_shared<MockBackend>([&](const ModelRequest&) {
      return "Here is the change:\n```diff\n" + expected.raw_text + "```\n";
    });
    ModelGateway gateway(backend, live_config());
    CHECK(gateway.generate_edit(prompt, kContext, selection).hunks.size() ==
          expected.hunks.size());
  }

  SUBCASE("prose degrades with the raw reply preserved") {
    auto backend = std::make_shared<MockBackend>(
        [](const ModelRequest&) { return "I would simply refactor the loop."; });
    ModelGateway gateway(backend, live_config());
    try {
      gateway.generate_edit(prompt, kContext, selection);
      FAIL("expected DegradationError");
    } catch (const DegradationError& e) {
      CHECK(e.raw == "I would simply refactor the loop.");
    }
  }

  SUBCASE("an empty prompt is rejected before any model call") {
    ModelGateway gateway(make_default_mock(), live_config());
    CHECK_THROWS_AS(gateway.generate_edit(Prompt{"  ", "u1", 0}, kContext, selection),
                    ValidationError);
  }
}

TEST_CASE("judge and replicates implement the replication rule") {
  const std::string original = "a = 1\nb = 2\nc = 3\n";
  EditDiff desired = compute_diff(original, "a = 1\nb = 9\nc = 3\n");
  EditDiff same_modulo_ws = compute_diff(original, "a = 1\nb =  9\nc = 3\n");
  EditDiff different = compute_diff(original, "a = 1\nb = 2\nc = 8\n");

  SUBCASE("whitespace-normalized equality short-circuits the judge") {
    auto never = std::make_shared<MockBackend>([](const ModelRequest&) -> std::string {
      throw ValidationError("the judge must not be consulted");
    });
    ModelGateway gateway(never, live_config());
    CHECK(gateway.replicates(original, same_modulo_ws, desired, "p", "p+"));
    CHECK(gateway.replicates(original, desired, desired, "p", "p+"));
  }

  SUBCASE("otherwise the judge verdict decides") {
    std::vector<std::string> seen;
    auto scripted = std::make_shared<MockBackend>([&](const ModelRequest& request) {
      seen.push_back(request.user_text);
      return std::string("score: 0.900000\nverdict: equivalent");
    });
    ModelGateway gateway(scripted, live_config());
    CHECK(gateway.replicates(original, different, desired, "orig prompt", "enh prompt"));
    REQUIRE(seen.size() == 1);
    // the judge request carries both prompts and both fenced diffs
    CHECK(seen[0].find("orig prompt") != std::string::npos);
    CHECK(seen[0].find("enh prompt") != std::string::npos);
    CHECK(fenced_block_after(seen[0], "Candidate Edit").value() == different.raw_text);
    CHECK(fenced_block_after(seen[0], "Desired Edit").value() == desired.raw_text);

    auto partial = std::make_shared<MockBackend>(
        [](const ModelRequest&) { return std::string("score: 0.500000\nverdict: partial"); });
    ModelGateway strict(partial, live_config());
    CHECK_FALSE(strict.replicates(original, different, desired, "p", "p+"));
  }

  SUBCASE("a candidate that fails to apply falls through to the judge") {
    EditDiff bogus = parse_unified_diff("@@ -9,1 +9,1 @@\n-zzz\n+yyy\n");
    auto refuse = std::make_shared<MockBackend>(
        [](const ModelRequest&) { return std::string("score: 0.000000\nverdict: different"); });
    ModelGateway gateway(refuse, live_config());
    CHECK_FALSE(gateway.replicates(original, bogus, desired, "p", "p+"));
  }

  SUBCASE("judge_similarity is the autorater metric") {
    auto scripted = std::make_shared<MockBackend>(
        [](const ModelRequest&) { return std::string("score: 0.250000\nverdict: different"); });
    ModelGateway gateway(scripted, live_config());
    SimilarityScore score = gateway.judge_similarity("p", "p+", different, desired);
    CHECK(score.value == 0.25);
    CHECK(score.metric == MetricName::Autorater);
  }
}

TEST_CASE("concurrent live calls respect the parallelism bound") {
  std::atomic<int> current{0};
  std::atomic<int> max_seen{0};
  auto slow = std::make_shared<MockBackend>([&](const ModelRequest& request) {
    int now = ++current;
    int prev = max_seen.load();
    while (prev < now && !max_seen.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --current;
    return "done " + request.user_text;
  });

  GatewayConfig config = live_config();
  config.parallelism = 2;
  ModelGateway gateway(slow, config);

  std::vector<std::thread> workers;
  for (int i = 0; i < 8; ++i) {
    workers.emplace_back([&gateway, i] {
      gateway.complete(ModelRole::Analyze, "sys", "req " + std::to_string(i));
    });
  }
  for (auto& worker : workers) worker.join();
  CHECK(max_seen.load() <= 2);
  CHECK(max_seen.load() >= 1);
}

TEST_CASE("concurrent recording persists each distinct request once") {
  TempDir dir("parallel_record");
  GatewayConfig config;
  config.mode = GatewayMode::Record;
  config.cache_path = dir.path / "cache.jsonl";
  config.parallelism = 4;

  auto backend = std::make_shared<MockBackend>(
      [](const ModelRequest& request) { return "r:" + request.user_text; });
  ModelGateway gateway(backend, config);

  std::vector<std::thread> workers;
  for (int i = 0; i < 8; ++i) {
    workers.emplace_back([&gateway, i] {
      gateway.complete(ModelRole::Analyze, "sys", "req " + std::to_string(i % 4));
    });
  }
  for (auto& worker : workers) worker.join();
  CHECK(gateway.cache_size() == 4);

  std::ifstream in(config.cache_path);
  std::string line;
  std::set<std::string> digests;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    digests.insert(json::parse(line).at("digest").get<std::string>());
    ++lines;
  }
  CHECK(lines == 4);
  CHECK(digests.size() == 4);
}

TEST_CASE("the http backend speaks JSON over POST with bearer auth") {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/complete", [&](const httplib::Request& request, httplib::Response& response) {
    int hit = ++hits;
    if (request.get_header_value("Authorization") != "Bearer sk-test") {
      response.status = 403;
      return;
    }
    if (hit == 1) {
      response.status = 503;  // first call fails, exercising the retry path
      return;
    }
    json body = json::parse(request.body);
    json reply;
    reply["text"] = "echo:" + body.at("user").get<std::string>();
    response.set_content(reply.dump(), "application/json");
  });

  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread serving([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const std::string endpoint = "http://127.0.0.1:" + std::to_string(port);
  {
    GatewayConfig config = live_config();
    config.max_attempts = 3;
    config.backoff_ms = 1;
    ModelGateway gateway(std::make_shared<HttpBackend>(endpoint, "sk-test"), config);
    CHECK(gateway.complete(ModelRole::Analyze, "sys", "hello") == "echo:hello");
    CHECK(gateway.backend_id() == "http:" + endpoint);
    CHECK(hits.load() == 2);
  }
  {
    GatewayConfig config = live_config();
    config.max_attempts = 1;
    ModelGateway unauthorized(std::make_shared<HttpBackend>(endpoint, "wrong-key"), config);
    CHECK_THROWS_AS(unauthorized.complete(ModelRole::Analyze, "sys", "hello"), RetryableError);
  }

  server.stop();
  serving.join();

  GatewayConfig config = live_config();
  config.max_attempts = 1;
  ModelGateway unreachable(std::make_shared<HttpBackend>(endpoint, "sk-test"), config);
  CHECK_THROWS_AS(unreachable.complete(ModelRole::Analyze, "sys", "bye"), RetryableError);
}

TEST_CASE("the default mock produces deterministic applicable edits") {
  ModelGateway gateway(make_default_mock(), live_config());
  const CodeRegion selection = make_region("m.py", 3, 4);

  EditDiff first = gateway.generate_edit(Prompt{"sum squares instead", "u1", 0}, kContext,
                                         selection);
  std::string applied = apply_diff(kContext, first);
  CHECK(applied != kContext);
  CHECK(applied.find("// revised") != std::string::npos);

  // only the selected line moved
  std::vector<std::string> before = split(kContext, '\n');
  std::vector<std::string> after = split(applied, '\n');
  REQUIRE(before.size() == after.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (i == 2) {
      CHECK(after[i] != before[i]);
      CHECK(after[i].rfind(before[i], 0) == 0);  // original text kept as a prefix
    } else {
      CHECK(after[i] == before[i]);
    }
  }

  // deterministic per prompt, distinct across prompts
  EditDiff again = gateway.generate_edit(Prompt{"sum squares instead", "u1", 0}, kContext,
                                         selection);
  CHECK(again.raw_text == first.raw_text);
  EditDiff other = gateway.generate_edit(Prompt{"use a generator", "u1", 0}, kContext,
                                         selection);
  CHECK(other.raw_text != first.raw_text);

  // an APPLY64 token smuggles an exact diff through the edit role
  EditDiff target = compute_diff(kContext, "def scale(values, factor):\n"
                                           "    return sum(v * factor for v in values)\n");
  Prompt exact{"Apply exactly this edit: APPLY64:" + base64_encode(target.raw_text), "u1", 0};
  EditDiff smuggled = gateway.generate_edit(exact, kContext, selection);
  CHECK(smuggled.raw_text == target.raw_text);

  // a malformed token falls back to the revision behaviour instead of failing
  EditDiff fallback = gateway.generate_edit(Prompt{"APPLY64:!!!notbase64", "u1", 0},
                                            kContext, selection);
  CHECK_NOTHROW(apply_diff(kContext, fallback));
}

TEST_CASE("the default mock answers each analysis format") {
  ModelGateway gateway(make_default_mock(), live_config());
  EditDiff golden = compute_diff("x = 1\n", "x = 2\n");

  SUBCASE("error analysis embeds the golden diff in the improved prompt") {
    std::string user =
        "Current Prompt:\nbump the constant\n\nCurrent Model Diff:\n```diff\n@@ -1,1 +1,1 "
        "@@\n-x = 1\n+x = 3\n```\n\nGolden Response Diff:\n```diff\n" +
        golden.raw_text + "```\n";
    std::string reply = gateway.complete(
        ModelRole::Analyze, "Instructions mentioning the Golden Response Diff input", user);
    CHECK(reply.find("## Diff Analysis") != std::string::npos);
    CHECK(reply.find("## Missing Specification") != std::string::npos);
    CHECK(reply.find("## Improved Prompt") != std::string::npos);

    std::size_t at = reply.find("APPLY64:");
    REQUIRE(at != std::string::npos);
    std::size_t end = reply.find_first_of(" \t\n", at);
    std::string token = reply.substr(at + 8, end - at - 8);
    CHECK(base64_decode(token) == golden.raw_text);
  }

  SUBCASE("enhancement replies carry numbered categorized variants") {
    std::string user = "Current Prompt:\nmake the loop faster please\n\nSelected Lines:\nm.py:3-4\n";
    std::string reply = gateway.complete(
        ModelRole::Analyze, "You will Generate Improved Prompts from the inputs", user);
    CHECK(reply.find("## Identified Missing Specifications") != std::string::npos);
    CHECK(reply.find("1. [Specifics] make the loop faster please") != std::string::npos);
    CHECK(reply.find("2. [User Intent]") != std::string::npos);
    CHECK(reply.find("3. [Localization/Scope]") != std::string::npos);
    CHECK(reply.find("## Recommended Prompt\n3") != std::string::npos);
    for (const std::string& line : split(reply, '\n')) {
      if (line.size() > 2 && line[0] >= '1' && line[0] <= '9' && line[1] == '.')
        CHECK(word_count(line) <= 50);
    }
  }

  SUBCASE("a desired-edit section switches to a single exact-apply variant") {
    std::string user = "Current Prompt:\nbump it\n\nDesired Final Code Edit:\n```diff\n" +
                       golden.raw_text + "```\n";
    std::string reply = gateway.complete(
        ModelRole::Analyze, "You will Generate Improved Prompts from the inputs", user);
    CHECK(reply.find("1. [Specifics] Apply exactly this edit: APPLY64:") != std::string::npos);
    CHECK(reply.find("## Recommended Prompt\n1") != std::string::npos);
    CHECK(reply.find("2. [") == std::string::npos);
  }

  SUBCASE("codebook induction yields a seven-row category table") {
    std::string reply = gateway.complete(ModelRole::Analyze,
                                         "Induce a codebook from these prompts", "p1\np2\n");
    std::size_t rows = 0;
    for (const std::string& line : split(reply, '\n'))
      if (line.rfind("| Missing", 0) == 0) ++rows;
    CHECK(rows == 7);
    CHECK(reply.find("| Missing Action |") != std::string::npos);
    CHECK(reply.find("| Missing Import/Dependency |") != std::string::npos);
  }
}

TEST_CASE("the default mock judges by normalized equality then gestalt") {
  ModelGateway gateway(make_default_mock(), live_config());
  EditDiff desired = compute_diff("a\nb\n", "a\nB!\n");
  EditDiff same_ws = parse_unified_diff("@@ -2,1 +2,1 @@\n-b\n+B!   \n");
  EditDiff far = compute_diff("a\nb\n", "zzz\n");

  JudgeResult equal = gateway.judge("p", "p", desired, desired);
  CHECK(equal.score == 1.0);
  CHECK(equal.verdict == JudgeVerdict::Equivalent);

  JudgeResult ws = gateway.judge("p", "p", same_ws, desired);
  CHECK(ws.score == 1.0);
  CHECK(ws.verdict == JudgeVerdict::Equivalent);

  JudgeResult apart = gateway.judge("p", "p", far, desired);
  CHECK(apart.score < 1.0);
  CHECK(apart.score >= 0.0);
  // the reported score is the gestalt similarity of the raw diff texts (within
  // the %.6f rendering of the reply)
  double oracle = gestalt(far.raw_text, desired.raw_text).value;
  CHECK(apart.score == doctest::Approx(oracle).epsilon(1e-5));
  CHECK(apart.verdict != JudgeVerdict::Equivalent);

  CHECK(gateway.complete(ModelRole::Judge, "pick one", "Candidates:\n1. a\n2. b\n") ==
        "choice: 1");
}
