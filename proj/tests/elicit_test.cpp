#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "spacecov/elicit.hpp"
#include "spacecov/error.hpp"
#include "spacecov/rng.hpp"
#include "support/fixtures.hpp"

using namespace spacecov;
namespace fs = std::filesystem;

namespace {

struct RecordedPost {
  std::string base_url;
  std::string path;
  std::vector<Header> headers;
  std::string body;
};

// Scripted transport: pops results front to back, repeating the last one.
// An empty script means no call was expected at all.
class RecordingTransport : public Transport {
public:
  explicit RecordingTransport(std::vector<HttpResult> script = {})
      : script_(std::move(script)) {}

  HttpResult post(const std::string& base_url, const std::string& path,
                  const std::vector<Header>& headers,
                  const std::string& body) override {
    std::lock_guard<std::mutex> lock(mu_);
    posts.push_back({base_url, path, headers, body});
    if (script_.empty()) throw std::runtime_error("unexpected network call");
    HttpResult r = script_.front();
    if (script_.size() > 1) script_.erase(script_.begin());
    return r;
  }

  std::vector<RecordedPost> posts;

private:
  std::mutex mu_;
  std::vector<HttpResult> script_;
};

ProviderProfile test_provider() {
  ProviderProfile p;
  p.name = "stub";
  p.base_url = "https://llm.example";
  p.path = "/v1/chat/completions";
  p.model = "test-model-1";
  p.body_template_json = R"({
    "model": "{{model}}",
    "temperature": "{{temperature}}",
    "messages": [
      {"role": "system", "content": "{{system_text}}"},
      {"role": "user", "content": "{{user_text}}"}
    ],
    "attachments": ["{{attachment}}"],
    "meta": "model={{model}}"
  })";
  p.response_text_pointer = "/choices/0/message/content";
  return p;
}

std::vector<std::string> cycled(std::size_t n,
                                const std::vector<std::string>& pool) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(pool[i % pool.size()]);
  return out;
}

ElicitationSpec test_spec(const SceneManifest& manifest,
                          const std::string& target = "de",
                          const std::string& target_name = "German") {
  ElicitationSpec s;
  s.target_code = target;
  s.target_name = target_name;
  s.reference_code = "en";
  s.reference_name = "English";
  s.reference_labels = cycled(manifest.size(), {"on", "in", "under", "above"});
  s.manifest = manifest;
  s.provider = test_provider();
  return s;
}

std::string canned_response(const std::vector<std::string>& labels) {
  nlohmann::json doc;
  doc["choices"][0]["message"]["content"] = format_numbered_list(labels);
  return doc.dump();
}

std::vector<std::string> german_labels(std::size_t n) {
  return cycled(n, {"auf", "in", "unter", "über", "an", "bei", "neben",
                    "hinter"});
}

template <typename Fn>
std::string error_message(Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

bool is_hex64(const std::string& s) {
  return s.size() == 64 &&
         std::all_of(s.begin(), s.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

std::size_t count_occurrences(const std::string& text,
                              const std::string& needle) {
  std::size_t count = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

}  // namespace

TEST_CASE("reference language policy and built-in display names") {
  CHECK(reference_policy("en") == "zh");
  CHECK(reference_policy("zh") == "en");
  CHECK(reference_policy("ko") == "en");
  CHECK(reference_policy("de") == "en");
  CHECK(default_language_name("en") == "English");
  CHECK(default_language_name("zh") == "Chinese");
  CHECK_FALSE(default_language_name("ko").has_value());
}

TEST_CASE("build_prompt covers every page of the 220-scene layout") {
  auto spec = test_spec(fixtures::four_set_manifest());
  PromptDoc doc = build_prompt(spec);

  CHECK(doc.system_text ==
        "You are a native speaker of German and I'd like you to respond in "
        "German.");
  const std::string& u = doc.user_text;
  CHECK(u.find("From image 1 to image 113, the focal object is gold and the "
               "background object is black.") != std::string::npos);
  CHECK(u.find("From image 114 to image 176, the focal object is yellow and "
               "indicated by an arrow, and the background object is black or "
               "blue.") != std::string::npos);
  CHECK(u.find("From image 177 to image 220, the focal object is indicated "
               "by a red arrow.") != std::string::npos);
  CHECK(u.find("An English speaker used the following spatial terms") !=
        std::string::npos);
  CHECK(u.find("1) \"on\"") != std::string::npos);
  CHECK(u.find("220) \"above\"") != std::string::npos);
  CHECK(count_occurrences(u, ") \"") == 220);
  CHECK(u.find("a single spatial term instead of a full sentence") !=
        std::string::npos);
  CHECK(u.find("please do not translate the responses I gave you in "
               "English!") != std::string::npos);
  CHECK(u.find("organized into a numbered list") != std::string::npos);

  REQUIRE(doc.attachment.has_value());
  CHECK(*doc.attachment == "scenes.pdf");
  CHECK(u.find("focal object:") == std::string::npos);
  CHECK(is_hex64(doc.digest));

  for (int i = 0; i < 10; ++i) {
    PromptDoc again = build_prompt(spec);
    CHECK(again.digest == doc.digest);
    CHECK(again.user_text == doc.user_text);
  }
}

TEST_CASE("text-only prompts describe each page instead of attaching") {
  auto manifest = fixtures::small_manifest(8);
  auto spec = test_spec(manifest);
  PromptDoc with_pdf = build_prompt(spec);

  spec.text_only = true;
  PromptDoc doc = build_prompt(spec);
  CHECK_FALSE(doc.attachment.has_value());
  CHECK(count_occurrences(doc.user_text, "\nimage ") == 8);
  const auto& first = manifest.at(0);
  std::string line1 = "image 1 — focal object: " + first.focal_object +
                      "; background object: " + first.background_object;
  CHECK(doc.user_text.find(line1) != std::string::npos);
  CHECK(doc.user_text.find("image 8 — focal object:") != std::string::npos);
  CHECK(doc.digest != with_pdf.digest);
}

TEST_CASE("prompt grammar adapts the article to the reference name") {
  auto manifest = fixtures::small_manifest(4);
  ElicitationSpec spec = test_spec(manifest, "en", "English");
  spec.reference_code = "zh";
  spec.reference_name = "Chinese";
  spec.reference_labels = cycled(4, {"上面", "里面"});
  PromptDoc doc = build_prompt(spec);
  CHECK(doc.user_text.find("A Chinese speaker used") != std::string::npos);
  CHECK(doc.system_text.find("native speaker of English") !=
        std::string::npos);
}

TEST_CASE("language names fall back to the built-in table") {
  auto spec = test_spec(fixtures::small_manifest(4), "en", "");
  spec.reference_code = "zh";
  spec.reference_name = "";
  PromptDoc doc = build_prompt(spec);
  CHECK(doc.user_text.find("A Chinese speaker") != std::string::npos);

  auto no_name = test_spec(fixtures::small_manifest(4), "de", "");
  CHECK(error_message([&] { build_prompt(no_name); })
            .find("no display name") != std::string::npos);
}

TEST_CASE("build_prompt rejects inconsistent inputs") {
  auto manifest = fixtures::small_manifest(8);

  auto short_list = test_spec(manifest);
  short_list.reference_labels.pop_back();
  CHECK_THROWS_AS(build_prompt(short_list), Error);

  auto self_ref = test_spec(manifest, "en", "English");
  CHECK(error_message([&] { build_prompt(self_ref); })
            .find("target and reference") != std::string::npos);

  auto hole = test_spec(manifest);
  hole.reference_labels[2] = "   ";
  std::string msg = error_message([&] { build_prompt(hole); });
  CHECK(msg.find("page 3") != std::string::npos);
  CHECK(msg.find(manifest.at(2).scene_id) != std::string::npos);
}

TEST_CASE("parse_numbered_response accepts the three list styles") {
  auto labels = parse_numbered_response(
      "1) auf\n2. in\n3: unter\n\n  4)   über  \n", 4);
  CHECK(labels == std::vector<std::string>{"auf", "in", "unter", "über"});
}

TEST_CASE("parse_numbered_response pinpoints malformed input") {
  CHECK(error_message([] { parse_numbered_response("1) a\n2) b\n3) c\n", 4); })
            .find("expected 4 labels, parsed 3") != std::string::npos);

  CHECK(error_message([] { parse_numbered_response("1) a\n3) b\n", 2); })
            .find("expected item 2") != std::string::npos);

  std::string msg =
      error_message([] { parse_numbered_response("1) a\nsure thing\n", 2); });
  CHECK(msg.find("line 2") != std::string::npos);
  CHECK(msg.find("sure thing") != std::string::npos);

  CHECK(error_message([] { parse_numbered_response("1) a\n2) b\n3) c\n", 2); })
            .find("exceeds") != std::string::npos);

  CHECK(error_message([] { parse_numbered_response("1)\n2) b\n", 2); })
            .find("no label") != std::string::npos);

  CHECK(error_message([] { parse_numbered_response("1) \xff\xfe\n", 1); })
            .find("line 1") != std::string::npos);
}

TEST_CASE("numbered list format/parse round-trip survives any vocabulary") {
  const std::vector<std::string> pool{
      "on", "üBer", "近く", "안에", "près de", "trên", "κοντά", "у", "上面"};
  SplitMix64 rng(404);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> labels;
    const int n = 1 + static_cast<int>(rng.below(12));
    for (int i = 0; i < n; ++i) {
      labels.push_back(pool[rng.below(pool.size())]);
    }
    auto parsed = parse_numbered_response(format_numbered_list(labels), n);
    CHECK(parsed == labels);
  }
}

TEST_CASE("cache keys react to endpoint, model, temperature and prompt") {
  auto spec = test_spec(fixtures::small_manifest(8));
  PromptDoc prompt = build_prompt(spec);
  std::string base = cache_key(spec, prompt);
  CHECK(is_hex64(base));
  CHECK(cache_key(spec, prompt) == base);

  auto hotter = spec;
  hotter.temperature = 0.5;
  CHECK(cache_key(hotter, prompt) != base);

  auto other_model = spec;
  other_model.provider.model = "test-model-2";
  CHECK(cache_key(other_model, prompt) != base);

  auto other_host = spec;
  other_host.provider.base_url = "https://other.example";
  CHECK(cache_key(other_host, prompt) != base);

  auto other_target = test_spec(fixtures::small_manifest(8), "fr", "French");
  CHECK(cache_key(other_target, build_prompt(other_target)) != base);
}

TEST_CASE("provider profiles parse with sensible defaults") {
  ProviderProfile p = ProviderProfile::from_json(R"({
    "base_url": "https://llm.example",
    "model": "m-9",
    "body_template": {"model": "{{model}}"},
    "response_text_pointer": "/text"
  })");
  CHECK(p.name == "unnamed");
  CHECK(p.path == "/v1/chat/completions");
  CHECK(p.auth_header == "Authorization");
  CHECK(p.auth_prefix == "Bearer ");
  CHECK(p.credential_env.empty());

  CHECK_THROWS_AS(ProviderProfile::from_json("not json"), Error);
  CHECK_THROWS_AS(ProviderProfile::from_json(R"({"model": "m"})"), Error);
  CHECK(error_message([] {
          ProviderProfile::from_json(R"({
            "base_url": "https://x", "model": "m",
            "body_template": "flat",
            "response_text_pointer": "/text"})");
        }).find("body_template") != std::string::npos);
  CHECK(error_message([] {
          ProviderProfile::from_json(R"({
            "base_url": "https://x", "model": "m",
            "body_template": {},
            "response_text_pointer": "text"})");
        }).find("starting with '/'") != std::string::npos);
}

TEST_CASE("dry run renders the request without touching the network") {
  auto dir = fixtures::fresh_temp_dir("elicit-dry");
  auto spec = test_spec(fixtures::small_manifest(8));
  spec.temperature = 0.25;

  RecordingTransport transport;
  ElicitOptions options;
  options.cache_dir = dir;
  options.dry_run = true;
  ElicitResult result = run_elicitation(spec, transport, options);

  CHECK(transport.posts.empty());
  CHECK_FALSE(result.labels.has_value());
  CHECK(result.attempts == 0);
  CHECK_FALSE(result.cache_hit);

  fs::path request = dir / (cache_key(spec, result.prompt) + ".request");
  REQUIRE(fs::exists(request));
  auto body = nlohmann::json::parse(fixtures::read_file(request));
  CHECK(body["model"] == "test-model-1");
  CHECK(body["temperature"].is_number());
  CHECK(body["temperature"] == 0.25);
  CHECK(body["messages"][0]["content"] == result.prompt.system_text);
  CHECK(body["messages"][1]["content"] == result.prompt.user_text);
  CHECK(body["attachments"] == nlohmann::json::array({"scenes.pdf"}));
  CHECK(body["meta"] == "model=test-model-1");

  int files = 0;
  for ([[maybe_unused]] const auto& entry : fs::directory_iterator(dir)) {
    ++files;
  }
  CHECK(files == 1);
}

TEST_CASE("a text-only body drops the attachment entry entirely") {
  auto dir = fixtures::fresh_temp_dir("elicit-noattach");
  auto spec = test_spec(fixtures::small_manifest(4));
  spec.text_only = true;

  RecordingTransport transport;
  ElicitOptions options;
  options.cache_dir = dir;
  options.dry_run = true;
  ElicitResult result = run_elicitation(spec, transport, options);

  fs::path request = dir / (cache_key(spec, result.prompt) + ".request");
  auto body = nlohmann::json::parse(fixtures::read_file(request));
  CHECK(body["attachments"] == nlohmann::json::array());
}

TEST_CASE("a cache miss posts once and the hit replays it byte for byte") {
  auto dir = fixtures::fresh_temp_dir("elicit-cache");
  auto manifest = fixtures::small_manifest(8);
  auto spec = test_spec(manifest);
  auto labels = german_labels(8);

  RecordingTransport transport({{200, canned_response(labels), ""}});
  ElicitOptions options;
  options.cache_dir = dir;
  options.min_interval = std::chrono::milliseconds(0);
  ElicitResult first = run_elicitation(spec, transport, options);

  CHECK(transport.posts.size() == 1);
  CHECK(transport.posts[0].base_url == "https://llm.example");
  CHECK(transport.posts[0].path == "/v1/chat/completions");
  CHECK(first.attempts == 1);
  CHECK_FALSE(first.cache_hit);
  REQUIRE(first.labels.has_value());
  REQUIRE(first.labels->size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    const LabelEntry& e = first.labels->entries()[i];
    CHECK(e.scene_id == manifest.at(i).scene_id);
    CHECK(e.language == "de");
    CHECK(e.annotator_id == "test-model-1");
    CHECK(e.raw_label == labels[i]);
  }

  std::string key = cache_key(spec, first.prompt);
  CHECK(fs::exists(dir / (key + ".request")));
  CHECK(fs::exists(dir / (key + ".response")));
  CHECK(fixtures::read_file(dir / (key + ".response")) ==
        canned_response(labels));

  RecordingTransport idle;
  ElicitResult second = run_elicitation(spec, idle, options);
  CHECK(idle.posts.empty());
  CHECK(second.cache_hit);
  CHECK(second.attempts == 0);
  REQUIRE(second.labels.has_value());
  CHECK(*second.labels == *first.labels);
}

TEST_CASE("an unparseable reply is kept aside and never poisons the cache") {
  auto dir = fixtures::fresh_temp_dir("elicit-badreply");
  auto spec = test_spec(fixtures::small_manifest(8));

  RecordingTransport broken(
      {{200, canned_response(german_labels(7)), ""}});
  ElicitOptions options;
  options.cache_dir = dir;
  options.min_interval = std::chrono::milliseconds(0);

  std::string msg =
      error_message([&] { run_elicitation(spec, broken, options); });
  CHECK(msg.find(".failed") != std::string::npos);

  std::string key = cache_key(spec, build_prompt(spec));
  CHECK(fs::exists(dir / (key + ".response.failed")));
  CHECK_FALSE(fs::exists(dir / (key + ".response")));

  RecordingTransport fixed({{200, canned_response(german_labels(8)), ""}});
  ElicitResult retry = run_elicitation(spec, fixed, options);
  CHECK(retry.labels.has_value());
  CHECK(fs::exists(dir / (key + ".response")));
}

TEST_CASE("transient failures back off exponentially before succeeding") {
  auto dir = fixtures::fresh_temp_dir("elicit-retry");
  auto spec = test_spec(fixtures::small_manifest(8));

  RecordingTransport flaky({{500, "busy", ""},
                            {0, "", "connection reset"},
                            {200, canned_response(german_labels(8)), ""}});
  std::vector<long> sleeps;
  ElicitOptions options;
  options.cache_dir = dir;
  options.min_interval = std::chrono::milliseconds(0);
  options.initial_backoff = std::chrono::milliseconds(500);
  options.sleep = [&](std::chrono::milliseconds d) {
    sleeps.push_back(d.count());
  };

  ElicitResult result = run_elicitation(spec, flaky, options);
  CHECK(result.attempts == 3);
  CHECK(flaky.posts.size() == 3);
  CHECK(sleeps == std::vector<long>{500, 1000});
  CHECK(result.labels.has_value());
}

TEST_CASE("a dead endpoint fails after max_attempts with the last error") {
  auto dir = fixtures::fresh_temp_dir("elicit-dead");
  auto spec = test_spec(fixtures::small_manifest(8));

  RecordingTransport dead({{503, "overloaded", ""}});
  ElicitOptions options;
  options.cache_dir = dir;
  options.max_attempts = 3;
  options.min_interval = std::chrono::milliseconds(0);
  options.sleep = [](std::chrono::milliseconds) {};

  std::string msg =
      error_message([&] { run_elicitation(spec, dead, options); });
  CHECK(msg.find("after 3 attempts") != std::string::npos);
  CHECK(msg.find("HTTP 503") != std::string::npos);
  CHECK(dead.posts.size() == 3);

  RecordingTransport unreachable({{0, "", "connection refused"}});
  options.max_attempts = 2;
  msg = error_message([&] { run_elicitation(spec, unreachable, options); });
  CHECK(msg.find("connection refused") != std::string::npos);
}

TEST_CASE("credentials come from the configured environment variable") {
  auto dir = fixtures::fresh_temp_dir("elicit-cred");
  auto spec = test_spec(fixtures::small_manifest(8));
  spec.provider.credential_env = "SPACECOV_TEST_KEY";

  RecordingTransport transport({{200, canned_response(german_labels(8)), ""}});
  ElicitOptions options;
  options.cache_dir = dir;
  options.min_interval = std::chrono::milliseconds(0);
  options.getenv = [](const std::string&) -> std::optional<std::string> {
    return std::nullopt;
  };

  std::string msg =
      error_message([&] { run_elicitation(spec, transport, options); });
  CHECK(msg.find("SPACECOV_TEST_KEY") != std::string::npos);
  CHECK(transport.posts.empty());

  options.getenv = [](const std::string& name) -> std::optional<std::string> {
    if (name == "SPACECOV_TEST_KEY") return "sekret-value";
    return std::nullopt;
  };
  ElicitResult result = run_elicitation(spec, transport, options);
  CHECK(result.labels.has_value());
  REQUIRE(transport.posts.size() == 1);
  const auto& headers = transport.posts[0].headers;
  REQUIRE(headers.size() == 1);
  CHECK(headers[0].first == "Authorization");
  CHECK(headers[0].second == "Bearer sekret-value");
}

TEST_CASE("custom auth header and prefix are honored") {
  auto dir = fixtures::fresh_temp_dir("elicit-authhdr");
  auto spec = test_spec(fixtures::small_manifest(4));
  spec.provider.credential_env = "SPACECOV_TEST_KEY";
  spec.provider.auth_header = "x-api-key";
  spec.provider.auth_prefix = "";

  RecordingTransport transport({{200, canned_response(german_labels(4)), ""}});
  ElicitOptions options;
  options.cache_dir = dir;
  options.min_interval = std::chrono::milliseconds(0);
  options.getenv = [](const std::string&) -> std::optional<std::string> {
    return "k-123";
  };
  run_elicitation(spec, transport, options);
  REQUIRE(transport.posts.size() == 1);
  CHECK(transport.posts[0].headers[0].first == "x-api-key");
  CHECK(transport.posts[0].headers[0].second == "k-123");
}

TEST_CASE("batch runs stay in spec order and pace their requests") {
  auto dir = fixtures::fresh_temp_dir("elicit-batch");
  auto manifest = fixtures::small_manifest(8);
  std::vector<ElicitationSpec> specs{
      test_spec(manifest, "de", "German"),
      test_spec(manifest, "fr", "French"),
      test_spec(manifest, "nl", "Dutch")};

  RecordingTransport transport({{200, canned_response(german_labels(8)), ""}});
  std::vector<long> sleeps;
  ElicitOptions options;
  options.cache_dir = dir;
  options.max_in_flight = 1;
  options.min_interval = std::chrono::milliseconds(500);
  options.sleep = [&](std::chrono::milliseconds d) {
    sleeps.push_back(d.count());
  };

  auto results = run_elicitations(specs, transport, options);
  REQUIRE(results.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    REQUIRE(results[i].labels.has_value());
    CHECK(results[i].labels->entries()[0].language == specs[i].target_code);
  }
  CHECK(transport.posts.size() == 3);
  // first start is immediate, the next two are spaced by the gate
  CHECK(sleeps.size() == 2);
  for (long s : sleeps) CHECK(s >= 400);

  // warm reruns hit the cache: no posts, no pacing
  RecordingTransport idle;
  sleeps.clear();
  auto again = run_elicitations(specs, idle, options);
  CHECK(idle.posts.empty());
  CHECK(sleeps.empty());
  for (const auto& r : again) CHECK(r.cache_hit);
}

TEST_CASE("elicitation demands a cache directory") {
  auto spec = test_spec(fixtures::small_manifest(4));
  RecordingTransport transport;
  ElicitOptions options;  // cache_dir left empty
  CHECK_THROWS_AS(run_elicitation(spec, transport, options), Error);
}
