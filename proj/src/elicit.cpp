#include "spacecov/elicit.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "spacecov/csv.hpp"
#include "spacecov/digest.hpp"
#include "spacecov/error.hpp"

namespace spacecov {

namespace {

constexpr const char* kAttachmentName = "scenes.pdf";

// Netstring-style framing so digests over concatenated parts are unambiguous.
std::string frame(std::string_view part) {
  std::string out = std::to_string(part.size());
  out.push_back(':');
  out.append(part);
  out.push_back(',');
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

bool starts_with_vowel(const std::string& word) {
  if (word.empty()) return false;
  switch (word[0]) {
    case 'A': case 'E': case 'I': case 'O': case 'U':
    case 'a': case 'e': case 'i': case 'o': case 'u':
      return true;
    default:
      return false;
  }
}

std::string highlight_sentence(int first, int last, Highlight h) {
  std::ostringstream out;
  out << "From image " << first << " to image " << last << ", the focal object ";
  switch (h) {
    case Highlight::GOLD:
      out << "is gold and the background object is black.";
      break;
    case Highlight::YELLOW_ARROW:
      out << "is yellow and indicated by an arrow, and the background object "
             "is black or blue.";
      break;
    case Highlight::RED_ARROW:
      out << "is indicated by a red arrow.";
      break;
  }
  return out.str();
}

std::string resolve_language_name(const std::string& code,
                                  const std::string& name,
                                  const char* role) {
  if (!name.empty()) return name;
  if (auto d = default_language_name(code)) return *d;
  fail("no display name for ", role, " language \"", code, "\"");
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& bytes) {
  static std::atomic<unsigned> counter{0};
  std::filesystem::path tmp = path;
  tmp += ".tmp" + std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail("cannot open ", tmp.string(), " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail("write failed for ", tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open ", path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct BodySubst {
  std::string model;
  double temperature = 0.0;
  std::string system_text;
  std::string user_text;
  std::optional<std::string> attachment;
};

std::string replace_all(std::string text, const std::string& needle,
                        const std::string& replacement) {
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), replacement);
    pos += replacement.size();
  }
  return text;
}

// Instantiates a body template. String values equal to a placeholder are
// replaced with the typed value; "{{attachment}}" with no attachment removes
// the containing entry (signalled by nullopt). Other strings get plain
// substring substitution.
std::optional<nlohmann::json> instantiate(const nlohmann::json& node,
                                          const BodySubst& subst) {
  if (node.is_string()) {
    const std::string& s = node.get_ref<const std::string&>();
    if (s == "{{model}}") return nlohmann::json(subst.model);
    if (s == "{{temperature}}") return nlohmann::json(subst.temperature);
    if (s == "{{system_text}}") return nlohmann::json(subst.system_text);
    if (s == "{{user_text}}") return nlohmann::json(subst.user_text);
    if (s == "{{attachment}}") {
      if (!subst.attachment) return std::nullopt;
      return nlohmann::json(*subst.attachment);
    }
    std::string out = s;
    out = replace_all(out, "{{model}}", subst.model);
    out = replace_all(out, "{{temperature}}", csv::format_double(subst.temperature));
    out = replace_all(out, "{{system_text}}", subst.system_text);
    out = replace_all(out, "{{user_text}}", subst.user_text);
    out = replace_all(out, "{{attachment}}",
                      subst.attachment ? *subst.attachment : "");
    return nlohmann::json(out);
  }
  if (node.is_object()) {
    nlohmann::json out = nlohmann::json::object();
    for (auto it = node.begin(); it != node.end(); ++it) {
      if (auto v = instantiate(it.value(), subst)) out[it.key()] = std::move(*v);
    }
    return out;
  }
  if (node.is_array()) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& item : node) {
      if (auto v = instantiate(item, subst)) out.push_back(std::move(*v));
    }
    return out;
  }
  return node;
}

std::string build_request_body(const ElicitationSpec& spec,
                               const PromptDoc& prompt) {
  nlohmann::json tmpl;
  try {
    tmpl = nlohmann::json::parse(spec.provider.body_template_json);
  } catch (const nlohmann::json::exception& e) {
    fail("provider \"", spec.provider.name, "\": bad body template: ", e.what());
  }
  BodySubst subst;
  subst.model = spec.provider.model;
  subst.temperature = spec.temperature;
  subst.system_text = prompt.system_text;
  subst.user_text = prompt.user_text;
  subst.attachment = prompt.attachment;
  auto body = instantiate(tmpl, subst);
  if (!body) fail("provider \"", spec.provider.name, "\": body template is a bare attachment placeholder");
  return body->dump(2);
}

std::string extract_response_text(const std::string& body,
                                  const ProviderProfile& provider) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    fail("response is not valid JSON: ", e.what());
  }
  nlohmann::json::json_pointer ptr;
  try {
    ptr = nlohmann::json::json_pointer(provider.response_text_pointer);
  } catch (const nlohmann::json::exception& e) {
    fail("provider \"", provider.name, "\": bad response_text_pointer: ",
         e.what());
  }
  if (!doc.contains(ptr)) {
    fail("response JSON has nothing at ", provider.response_text_pointer);
  }
  const nlohmann::json& text = doc.at(ptr);
  if (!text.is_string()) {
    fail("response JSON at ", provider.response_text_pointer,
         " is not a string");
  }
  return text.get<std::string>();
}

LabelTable table_from_labels(const ElicitationSpec& spec,
                             const std::vector<std::string>& labels) {
  LabelTable table;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    LabelEntry entry;
    entry.scene_id = spec.manifest.at(i).scene_id;
    entry.language = spec.target_code;
    entry.annotator_id = spec.provider.model;
    entry.raw_label = labels[i];
    table.add(std::move(entry));
  }
  return table;
}

// Serializes request starts so at most one begins per min_interval.
struct RequestGate {
  std::mutex mu;
  std::chrono::steady_clock::time_point next_start =
      std::chrono::steady_clock::now();
  std::chrono::milliseconds min_interval{0};
};

using SleepFn = std::function<void(std::chrono::milliseconds)>;

void wait_turn(RequestGate* gate, const SleepFn& sleep) {
  if (!gate || gate->min_interval.count() <= 0) return;
  std::chrono::milliseconds wait{0};
  {
    std::lock_guard<std::mutex> lock(gate->mu);
    auto now = std::chrono::steady_clock::now();
    auto start = std::max(now, gate->next_start);
    gate->next_start = start + gate->min_interval;
    wait = std::chrono::duration_cast<std::chrono::milliseconds>(start - now);
  }
  if (wait.count() > 0) sleep(wait);
}

SleepFn resolve_sleep(const ElicitOptions& options) {
  if (options.sleep) return options.sleep;
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::optional<std::string> system_getenv(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (!v) return std::nullopt;
  return std::string(v);
}

ElicitResult run_one(const ElicitationSpec& spec, Transport& transport,
                     const ElicitOptions& options, RequestGate* gate) {
  if (options.cache_dir.empty()) fail("elicitation needs a cache directory");
  std::filesystem::create_directories(options.cache_dir);

  ElicitResult result;
  result.prompt = build_prompt(spec);
  const std::string key = cache_key(spec, result.prompt);
  const std::filesystem::path request_path =
      options.cache_dir / (key + ".request");
  const std::filesystem::path response_path =
      options.cache_dir / (key + ".response");
  const std::string body = build_request_body(spec, result.prompt);

  if (options.dry_run) {
    write_file_atomic(request_path, body);
    return result;
  }

  std::string response_body;
  if (std::filesystem::exists(response_path)) {
    response_body = read_file(response_path);
    result.cache_hit = true;
  } else {
    std::vector<Header> headers;
    if (!spec.provider.credential_env.empty()) {
      auto getenv_fn =
          options.getenv ? options.getenv
                         : std::function<std::optional<std::string>(
                               const std::string&)>(system_getenv);
      auto credential = getenv_fn(spec.provider.credential_env);
      if (!credential || credential->empty()) {
        fail("credential environment variable ", spec.provider.credential_env,
             " is not set");
      }
      headers.emplace_back(spec.provider.auth_header,
                           spec.provider.auth_prefix + *credential);
    }
    write_file_atomic(request_path, body);

    SleepFn sleep = resolve_sleep(options);
    const int max_attempts = std::max(1, options.max_attempts);
    HttpResult http;
    auto backoff = options.initial_backoff;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
      result.attempts = attempt;
      wait_turn(gate, sleep);
      http = transport.post(spec.provider.base_url, spec.provider.path,
                            headers, body);
      if (http.ok()) break;
      if (attempt == max_attempts) {
        if (!http.error.empty()) {
          fail("request to ", spec.provider.base_url, " failed after ",
               attempt, " attempts: ", http.error);
        }
        fail("request to ", spec.provider.base_url, " failed after ", attempt,
             " attempts: HTTP ", http.status);
      }
      sleep(backoff);
      backoff *= 2;
    }
    response_body = http.body;
  }

  std::vector<std::string> labels;
  try {
    std::string text = extract_response_text(response_body, spec.provider);
    labels = parse_numbered_response(
        text, static_cast<int>(spec.manifest.size()));
  } catch (const std::exception& e) {
    std::filesystem::path failed = response_path;
    failed += ".failed";
    write_file_atomic(failed, response_body);
    fail("cannot parse response for ", spec.target_code, " (raw bytes kept at ",
         failed.string(), "): ", e.what());
  }
  if (!result.cache_hit) write_file_atomic(response_path, response_body);

  result.labels = table_from_labels(spec, labels);
  return result;
}

}  // namespace

ProviderProfile ProviderProfile::from_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail("bad provider profile: ", e.what());
  }
  if (!doc.is_object()) fail("provider profile must be a JSON object");

  ProviderProfile p;
  auto require_string = [&](const char* field) {
    if (!doc.contains(field) || !doc[field].is_string() ||
        doc[field].get<std::string>().empty()) {
      fail("provider profile needs a non-empty string field \"", field, "\"");
    }
    return doc[field].get<std::string>();
  };
  p.name = doc.value("name", std::string("unnamed"));
  p.base_url = require_string("base_url");
  p.model = require_string("model");
  p.path = doc.value("path", std::string("/v1/chat/completions"));
  p.credential_env = doc.value("credential_env", std::string());
  p.auth_header = doc.value("auth_header", std::string("Authorization"));
  p.auth_prefix = doc.value("auth_prefix", std::string("Bearer "));
  if (!doc.contains("body_template") || !doc["body_template"].is_object()) {
    fail("provider profile needs a \"body_template\" JSON object");
  }
  p.body_template_json = doc["body_template"].dump();
  p.response_text_pointer = require_string("response_text_pointer");
  if (p.response_text_pointer[0] != '/') {
    fail("response_text_pointer must be a JSON pointer starting with '/'");
  }
  return p;
}

ProviderProfile ProviderProfile::load(const std::filesystem::path& path) {
  try {
    return from_json(read_file(path));
  } catch (const Error& e) {
    fail(path.string(), ": ", e.what());
  }
}

std::string reference_policy(const std::string& target_code) {
  return target_code == "en" ? "zh" : "en";
}

std::optional<std::string> default_language_name(const std::string& code) {
  if (code == "en") return "English";
  if (code == "zh") return "Chinese";
  return std::nullopt;
}

PromptDoc build_prompt(const ElicitationSpec& spec) {
  if (spec.manifest.size() == 0) fail("manifest is empty");
  if (spec.reference_labels.size() != spec.manifest.size()) {
    fail("reference labels cover ", spec.reference_labels.size(),
         " scenes but the manifest has ", spec.manifest.size());
  }
  if (spec.target_code == spec.reference_code) {
    fail("target and reference language are both \"", spec.target_code, "\"");
  }
  for (std::size_t i = 0; i < spec.reference_labels.size(); ++i) {
    if (trim(spec.reference_labels[i]).empty()) {
      fail("reference label for page ", i + 1, " (",
           spec.manifest.at(i).scene_id, ") is missing");
    }
  }
  const std::string target =
      resolve_language_name(spec.target_code, spec.target_name, "target");
  const std::string reference = resolve_language_name(
      spec.reference_code, spec.reference_name, "reference");

  PromptDoc doc;
  doc.system_text = "You are a native speaker of " + target +
                    " and I'd like you to respond in " + target + ".";

  std::ostringstream user;
  user << "Your task is to label the spatial relationships shown in a set of "
          "images. Here is a set of images that I'll call "
       << kAttachmentName
       << ". Each image shows a focal object and a background object.";
  for (const auto& [first, last, highlight] : spec.manifest.highlight_runs()) {
    user << ' ' << highlight_sentence(first, last, highlight);
  }
  user << ' ' << (starts_with_vowel(reference) ? "An " : "A ") << reference
       << " speaker used the following spatial terms to describe the "
          "relationship between the focal object and the background object "
          "in each image: ";
  for (std::size_t i = 0; i < spec.reference_labels.size(); ++i) {
    if (i > 0) user << "; ";
    user << (i + 1) << ") \"" << trim(spec.reference_labels[i]) << '"';
  }
  user << ". I'd like you to label the same images in " << kAttachmentName
       << ". For each image in " << kAttachmentName
       << ", please give me the spatial term in " << target
       << " that best describes the relationship between the focal object "
          "and the background object. For each image, please respond using a "
          "single spatial term instead of a full sentence. And please do not "
          "translate the responses I gave you in "
       << reference << "! Instead, I'd like you to respond as a native "
       << target << " speaker would. Your responses (one for each image in "
       << kAttachmentName << ") should be organized into a numbered list.";

  if (spec.text_only) {
    user << "\n\nThe images in " << kAttachmentName
         << " are described in text form below.";
    for (const auto& scene : spec.manifest.scenes()) {
      user << "\nimage " << scene.page_number
           << " — focal object: " << scene.focal_object
           << "; background object: " << scene.background_object;
    }
  } else {
    doc.attachment = kAttachmentName;
  }

  doc.user_text = user.str();
  doc.digest = sha256_hex(frame(doc.system_text) + frame(doc.user_text) +
                          frame(doc.attachment ? *doc.attachment : "") +
                          (doc.attachment ? "1" : "0"));
  return doc;
}

std::vector<std::string> parse_numbered_response(const std::string& text,
                                                 int expected_n) {
  if (expected_n < 1) fail("expected_n must be at least 1");
  std::vector<std::string> labels;
  std::istringstream in(text);
  std::string raw_line;
  int line_no = 0;
  while (std::getline(in, raw_line)) {
    ++line_no;
    std::string line = trim(raw_line);
    if (line.empty()) continue;

    std::size_t pos = 0;
    while (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos]))) {
      ++pos;
    }
    if (pos == 0 || pos >= line.size() ||
        (line[pos] != ')' && line[pos] != '.' && line[pos] != ':')) {
      fail("line ", line_no, ": expected `N) label`, got \"", raw_line, "\"");
    }
    int number = 0;
    std::from_chars(line.data(), line.data() + pos, number);
    const int expected_number = static_cast<int>(labels.size()) + 1;
    if (number != expected_number) {
      fail("line ", line_no, ": expected item ", expected_number, ", got ",
           number);
    }
    if (number > expected_n) {
      fail("line ", line_no, ": item ", number, " exceeds the expected ",
           expected_n, " labels");
    }
    std::string label = trim(line.substr(pos + 1));
    if (label.empty()) fail("line ", line_no, ": item ", number, " has no label");
    try {
      normalize_label(label);
    } catch (const std::exception& e) {
      fail("line ", line_no, ": bad label: ", e.what());
    }
    labels.push_back(std::move(label));
  }
  if (static_cast<int>(labels.size()) != expected_n) {
    fail("expected ", expected_n, " labels, parsed ", labels.size());
  }
  return labels;
}

std::string format_numbered_list(const std::vector<std::string>& labels) {
  std::ostringstream out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << (i + 1) << ") " << labels[i] << '\n';
  }
  return out.str();
}

std::string cache_key(const ElicitationSpec& spec, const PromptDoc& prompt) {
  return sha256_hex(frame(spec.provider.base_url) + frame(spec.provider.model) +
                    frame(csv::format_double(spec.temperature)) +
                    frame(prompt.digest));
}

HttpResult HttplibTransport::post(const std::string& base_url,
                                  const std::string& path,
                                  const std::vector<Header>& headers,
                                  const std::string& body) {
  httplib::Client client(base_url);
  client.set_connection_timeout(std::chrono::seconds(15));
  client.set_read_timeout(std::chrono::seconds(300));
  client.set_write_timeout(std::chrono::seconds(60));
  httplib::Headers hs;
  for (const auto& [name, value] : headers) hs.emplace(name, value);
  auto res = client.Post(path, hs, body, "application/json");
  if (!res) return {0, "", httplib::to_string(res.error())};
  return {res->status, res->body, ""};
}

ElicitResult run_elicitation(const ElicitationSpec& spec, Transport& transport,
                             const ElicitOptions& options) {
  RequestGate gate;
  gate.min_interval = options.min_interval;
  return run_one(spec, transport, options, &gate);
}

std::vector<ElicitResult> run_elicitations(
    const std::vector<ElicitationSpec>& specs, Transport& transport,
    const ElicitOptions& options) {
  std::vector<ElicitResult> results(specs.size());
  std::vector<std::exception_ptr> errors(specs.size());
  if (specs.empty()) return results;

  RequestGate gate;
  gate.min_interval = options.min_interval;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= specs.size()) return;
      try {
        results[i] = run_one(specs[i], transport, options, &gate);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const std::size_t n_threads =
      std::min(std::max<std::size_t>(1, options.max_in_flight), specs.size());
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  return results;
}

}  // namespace spacecov
