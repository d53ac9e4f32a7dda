#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spacecov/label_store.hpp"

namespace spacecov {

// How to reach one chat-completion-style endpoint. The body template keeps
// provider differences in configuration: string values equal to
// "{{model}}", "{{temperature}}", "{{system_text}}", "{{user_text}}" or
// "{{attachment}}" are replaced wholesale (temperature becomes a number,
// a missing attachment removes the entry); other strings get substring
// substitution.
struct ProviderProfile {
  std::string name;
  std::string base_url;
  std::string path;
  std::string model;
  std::string credential_env;
  std::string auth_header = "Authorization";
  std::string auth_prefix = "Bearer ";
  std::string body_template_json;     // serialized JSON template
  std::string response_text_pointer;  // JSON pointer to the reply text

  static ProviderProfile from_json(const std::string& json_text);
  static ProviderProfile load(const std::filesystem::path& path);
};

struct ElicitationSpec {
  std::string target_code;
  std::string target_name;
  std::string reference_code;
  std::string reference_name;
  std::vector<std::string> reference_labels;  // aligned to manifest pages
  SceneManifest manifest;
  bool text_only = false;
  ProviderProfile provider;
  double temperature = 0.0;
};

struct PromptDoc {
  std::string system_text;
  std::string user_text;
  std::optional<std::string> attachment;  // document reference, e.g. scenes.pdf
  std::string digest;                     // sha256 over the canonical bytes
};

// "zh" when the target is "en"; "en" for every other target.
std::string reference_policy(const std::string& target_code);

// Built-in display names for the two reference languages the policy can
// produce; anything else must be supplied explicitly.
std::optional<std::string> default_language_name(const std::string& code);

PromptDoc build_prompt(const ElicitationSpec& spec);

// Accepts `N) label`, `N. label` and `N: label` lines, numbered 1..expected_n
// in order; blank lines are ignored. Labels are validated via normalize_label.
std::vector<std::string> parse_numbered_response(const std::string& text,
                                                 int expected_n);

// Renders labels as the `N) label` list the prompt requests.
std::string format_numbered_list(const std::vector<std::string>& labels);

std::string cache_key(const ElicitationSpec& spec, const PromptDoc& prompt);

struct HttpResult {
  int status = 0;
  std::string body;
  std::string error;  // transport-level failure, empty on an HTTP response
  bool ok() const { return error.empty() && status >= 200 && status < 300; }
};

using Header = std::pair<std::string, std::string>;

class Transport {
public:
  virtual ~Transport() = default;
  virtual HttpResult post(const std::string& base_url, const std::string& path,
                          const std::vector<Header>& headers,
                          const std::string& body) = 0;
};

// cpp-httplib implementation (HTTPS via OpenSSL).
class HttplibTransport : public Transport {
public:
  HttpResult post(const std::string& base_url, const std::string& path,
                  const std::vector<Header>& headers,
                  const std::string& body) override;
};

struct ElicitOptions {
  std::filesystem::path cache_dir;
  bool dry_run = false;
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{500};
  std::size_t max_in_flight = 4;
  std::chrono::milliseconds min_interval{500};
  // Injectable for tests; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep;
  // Environment lookup, injectable for tests; defaults to ::getenv.
  std::function<std::optional<std::string>(const std::string&)> getenv;
};

struct ElicitResult {
  PromptDoc prompt;
  std::optional<LabelTable> labels;  // empty on dry runs
  bool cache_hit = false;
  int attempts = 0;  // network attempts made (0 on dry run or cache hit)
};

ElicitResult run_elicitation(const ElicitationSpec& spec, Transport& transport,
                             const ElicitOptions& options);

// Runs several elicitations with at most max_in_flight concurrent requests
// and min_interval between request starts against the provider. Results are
// returned in spec order.
std::vector<ElicitResult> run_elicitations(
    const std::vector<ElicitationSpec>& specs, Transport& transport,
    const ElicitOptions& options);

}  // namespace spacecov
