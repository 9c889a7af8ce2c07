#include "restinfer/llm.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <httplib.h>

namespace restinfer {

std::string to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::BaseData: return "BASE_DATA";
    case PromptKind::RouteList: return "ROUTE_LIST";
    case PromptKind::ParamList: return "PARAM_LIST";
    case PromptKind::MaskFill: return "MASK_FILL";
    case PromptKind::PayloadExample: return "PAYLOAD_EXAMPLE";
    case PromptKind::Description: return "DESCRIPTION";
  }
  return "BASE_DATA";
}

namespace {

std::string require_field(const std::optional<std::string>& value, const char* name,
                          PromptKind kind) {
  if (!value) throw MissingContext(to_string(kind) + std::string(" prompt needs ") + name);
  return *value;
}

// Noun used in the masked-request prompt, matched to the token being filled.
std::string token_noun(const std::string& token) {
  if (token == mask_token_text(MaskTokenKind::Route)) return "routes";
  if (token == mask_token_text(MaskTokenKind::ParamPair)) return "parameter=value pairs";
  if (token == mask_token_text(MaskTokenKind::ParamName)) return "parameter names";
  return "values";
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string strip_quotes(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\'')))
    return s.substr(1, s.size() - 2);
  return s;
}

}  // namespace

BuiltPrompt build_prompt(PromptKind kind, const PromptContext& ctx) {
  if (ctx.api_name.empty()) throw MissingContext("prompt context needs api_name");

  std::ostringstream text;
  std::ostringstream digest;
  digest << to_string(kind) << "|api=" << ctx.api_name;

  switch (kind) {
    case PromptKind::BaseData: {
      text << "Provide base data for the " << ctx.api_name << " REST API. "
           << "Answer with a JSON object holding the fields \"description\" (one sentence), "
           << "\"documentation_url\", and \"server_url\".";
      if (ctx.attempt > 1) {
        std::string field = require_field(ctx.field, "field", kind);
        std::string prev = ctx.previous_invalid.value_or("(none provided)");
        text << " The previous URL was invalid (\"" << prev << "\"). "
             << "Provide a corrected value for \"" << field << "\".";
        digest << "|field=" << field << "|attempt=" << ctx.attempt;
      }
      break;
    }
    case PromptKind::RouteList: {
      text << "Give a list containing all routes that exist in the " << ctx.api_name
           << " API. Answer with a JSON array of strings.";
      break;
    }
    case PromptKind::ParamList: {
      std::string route = require_field(ctx.route, "route", kind);
      text << "Give a list containing all query parameters that can be used with the route \""
           << route << "\" of the " << ctx.api_name
           << " API. Answer with a JSON array of strings.";
      digest << "|route=" << route;
      break;
    }
    case PromptKind::MaskFill: {
      std::string token = require_field(ctx.token, "token", kind);
      std::string tmpl = require_field(ctx.masked_template, "masked_template", kind);
      text << "Return a list containing " << token_noun(token) << " that can replace \"" << token
           << "\" in the following request: \"" << tmpl
           << "\". Answer with a JSON array of strings.";
      digest << "|token=" << token;
      break;
    }
    case PromptKind::PayloadExample: {
      std::string route = require_field(ctx.route, "route", kind);
      std::string method = require_field(ctx.method, "method", kind);
      text << "Give a complete example of a data payload in the JSON format for a " << method
           << " request to the route \"" << route << "\" of the " << ctx.api_name
           << " API. Answer with a single JSON object.";
      digest << "|route=" << route << "|method=" << method;
      break;
    }
    case PromptKind::Description: {
      std::string subject = require_field(ctx.subject, "subject", kind);
      text << "Give a one-sentence human-readable description of " << subject << " of the "
           << ctx.api_name << " API. Answer with the sentence only.";
      digest << "|subject=" << subject;
      break;
    }
  }
  return {text.str(), digest.str()};
}

ScriptedBackend ScriptedBackend::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BackendUnavailable("cannot open completion fixture: " + path);
  nlohmann::json fixture;
  try {
    in >> fixture;
  } catch (const nlohmann::json::parse_error& e) {
    throw BackendUnavailable("completion fixture is not valid JSON: " + std::string(e.what()));
  }
  return ScriptedBackend(std::move(fixture));
}

ScriptedBackend::ScriptedBackend(nlohmann::json fixture) : fixture_(std::move(fixture)) {}

namespace {

Completion completion_from_entry(const nlohmann::json& entry) {
  Completion out;
  if (entry.contains("text")) {
    const auto& t = entry.at("text");
    out.text = t.is_string() ? t.get<std::string>() : t.dump();
  }
  if (entry.contains("input_tokens")) out.usage.input_tokens = entry.at("input_tokens").get<long long>();
  if (entry.contains("output_tokens"))
    out.usage.output_tokens = entry.at("output_tokens").get<long long>();
  return out;
}

}  // namespace

Completion ScriptedBackend::complete(const std::string&, double, const std::string& digest) {
  if (fixture_.contains("completions")) {
    const auto& table = fixture_.at("completions");
    if (table.contains(digest)) return completion_from_entry(table.at(digest));
  }
  if (fixture_.contains("default")) return completion_from_entry(fixture_.at("default"));
  return {};
}

HttpChatBackend::HttpChatBackend(const std::string& endpoint_spec,
                                 const std::optional<std::string>& key_env) {
  auto hash = endpoint_spec.rfind('#');
  std::string url = (hash == std::string::npos) ? endpoint_spec : endpoint_spec.substr(0, hash);
  model_ = (hash == std::string::npos) ? "default" : endpoint_spec.substr(hash + 1);

  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw BackendUnavailable("backend endpoint must be an http(s) URL: " + endpoint_spec);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    endpoint_ = url;
    path_ = "/";
  } else {
    endpoint_ = url.substr(0, path_start);
    path_ = url.substr(path_start);
  }

  if (key_env) {
    const char* key = std::getenv(key_env->c_str());
    if (!key) throw BackendUnavailable("environment variable not set: " + *key_env);
    api_key_ = key;
  }
}

Completion HttpChatBackend::complete(const std::string& prompt_text, double temperature,
                                     const std::string&) {
  nlohmann::json payload = {
      {"model", model_},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt_text}}})},
      {"temperature", temperature},
  };

  httplib::Client client(endpoint_);
  client.set_connection_timeout(30, 0);
  client.set_read_timeout(30, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  auto res = client.Post(path_, headers, payload.dump(), "application/json");
  if (!res) throw BackendUnavailable("backend request failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw BackendUnavailable("backend returned status " + std::to_string(res->status));

  nlohmann::json body;
  try {
    body = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error&) {
    throw BackendUnavailable("backend response is not valid JSON");
  }

  Completion out;
  try {
    out.text = body.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw BackendUnavailable("backend response missing choices[0].message.content");
  }
  if (body.contains("usage")) {
    const auto& usage = body.at("usage");
    if (usage.contains("prompt_tokens"))
      out.usage.input_tokens = usage.at("prompt_tokens").get<long long>();
    if (usage.contains("completion_tokens"))
      out.usage.output_tokens = usage.at("completion_tokens").get<long long>();
  }
  return out;
}

std::shared_ptr<LlmBackend> make_backend(const RunConfig& config,
                                         const std::optional<std::string>& fixture_path) {
  if (config.llm_backend == "scripted") {
    if (!fixture_path)
      throw BackendUnavailable("scripted backend requires a completion fixture path");
    return std::make_shared<ScriptedBackend>(ScriptedBackend::from_file(*fixture_path));
  }
  if (config.llm_backend.find("://") != std::string::npos)
    return std::make_shared<HttpChatBackend>(config.llm_backend, config.llm_key_env);
  throw BackendUnavailable("unknown llm_backend: " + config.llm_backend);
}

LlmGateway::LlmGateway(std::shared_ptr<LlmBackend> backend, double temperature, bool cache_enabled)
    : backend_(std::move(backend)), temperature_(temperature), cache_enabled_(cache_enabled) {}

Completion LlmGateway::complete(PromptKind kind, const PromptContext& ctx) {
  BuiltPrompt prompt = build_prompt(kind, ctx);
  if (cache_enabled_) {
    if (auto it = cache_.find(prompt.text); it != cache_.end()) return it->second;
  }
  Completion completion = backend_->complete(prompt.text, temperature_, prompt.digest);
  usage_ += completion.usage;
  ++calls_made_;
  if (cache_enabled_) cache_[prompt.text] = completion;
  return completion;
}

namespace {

// Locate a balanced [...] region starting at `open`, honouring strings.
std::optional<std::string> balanced_region(const std::string& raw, std::size_t open, char open_ch,
                                           char close_ch) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < raw.size(); ++i) {
    char c = raw[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == open_ch) {
      ++depth;
    } else if (c == close_ch) {
      --depth;
      if (depth == 0) return raw.substr(open, i - open + 1);
    }
  }
  return std::nullopt;
}

std::vector<std::string> finalize_items(std::vector<std::string> items) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (auto& item : items) {
    std::string cleaned = strip_quotes(trim(item));
    if (cleaned.empty()) continue;
    if (cleaned == mask_token_text(MaskTokenKind::Route) ||
        cleaned == mask_token_text(MaskTokenKind::ParamPair) ||
        cleaned == mask_token_text(MaskTokenKind::ParamName) ||
        cleaned == mask_token_text(MaskTokenKind::ParamValue))
      continue;
    if (seen.insert(cleaned).second) out.push_back(std::move(cleaned));
  }
  return out;
}

}  // namespace

std::vector<std::string> parse_value_list(const std::string& raw) {
  // Layer 1: a genuine JSON array anywhere in the text.
  for (std::size_t pos = raw.find('['); pos != std::string::npos; pos = raw.find('[', pos + 1)) {
    auto region = balanced_region(raw, pos, '[', ']');
    if (!region) continue;
    nlohmann::json arr = nlohmann::json::parse(*region, nullptr, false);
    if (arr.is_discarded() || !arr.is_array()) continue;
    std::vector<std::string> items;
    for (const auto& el : arr) {
      if (el.is_string())
        items.push_back(el.get<std::string>());
      else if (el.is_number() || el.is_boolean())
        items.push_back(el.dump());
    }
    return finalize_items(std::move(items));
  }

  // Layer 2: a bracketed comma list with unquoted words.
  if (auto open = raw.find('['); open != std::string::npos) {
    if (auto region = balanced_region(raw, open, '[', ']')) {
      std::string inner = region->substr(1, region->size() - 2);
      std::vector<std::string> items;
      std::stringstream ss(inner);
      std::string item;
      while (std::getline(ss, item, ',')) items.push_back(item);
      auto cleaned = finalize_items(std::move(items));
      if (!cleaned.empty()) return cleaned;
    }
  }

  // Layer 3: one item per line, list bullets stripped.
  std::vector<std::string> items;
  std::stringstream lines(raw);
  std::string line;
  while (std::getline(lines, line)) {
    std::string t = trim(line);
    std::size_t i = 0;
    while (i < t.size() && (std::isdigit(static_cast<unsigned char>(t[i])) != 0)) ++i;
    if (i > 0 && i < t.size() && (t[i] == '.' || t[i] == ')')) {
      t = trim(t.substr(i + 1));
    } else if (!t.empty() && (t[0] == '-' || t[0] == '*')) {
      t = trim(t.substr(1));
    }
    items.push_back(t);
  }
  return finalize_items(std::move(items));
}

std::optional<nlohmann::json> extract_first_json_object(const std::string& raw) {
  for (std::size_t pos = raw.find('{'); pos != std::string::npos; pos = raw.find('{', pos + 1)) {
    auto region = balanced_region(raw, pos, '{', '}');
    if (!region) continue;
    nlohmann::json obj = nlohmann::json::parse(*region, nullptr, false);
    if (!obj.is_discarded() && obj.is_object()) return obj;
  }
  return std::nullopt;
}

namespace {

std::optional<std::string> url_field(const nlohmann::json& obj, const std::string& field) {
  if (obj.contains(field) && obj.at(field).is_string()) {
    std::string v = obj.at(field).get<std::string>();
    if (!v.empty()) return v;
  }
  return std::nullopt;
}

}  // namespace

BaseData fetch_base_data(LlmGateway& gateway, const std::string& api_name, const UrlProber& probe) {
  PromptContext ctx;
  ctx.api_name = api_name;
  Completion first = gateway.complete(PromptKind::BaseData, ctx);

  BaseData out;
  nlohmann::json obj = nlohmann::json::object();
  if (auto parsed = extract_first_json_object(first.text)) obj = std::move(*parsed);
  if (obj.contains("description") && obj.at("description").is_string())
    out.description = obj.at("description").get<std::string>();

  auto resolve_url = [&](const std::string& field) -> std::optional<std::string> {
    std::optional<std::string> candidate = url_field(obj, field);
    // The combined first call counts as attempt 1 for both URL fields.
    for (int attempt = 1; attempt <= 3; ++attempt) {
      if (candidate && probe(*candidate)) return candidate;
      if (attempt == 3) break;
      PromptContext retry;
      retry.api_name = api_name;
      retry.field = field;
      retry.attempt = attempt + 1;
      retry.previous_invalid = candidate;
      Completion completion = gateway.complete(PromptKind::BaseData, retry);
      candidate.reset();
      if (auto parsed = extract_first_json_object(completion.text)) {
        candidate = url_field(*parsed, field);
      }
      if (!candidate) {
        std::string bare = strip_quotes(trim(completion.text));
        if (bare.rfind("http://", 0) == 0 || bare.rfind("https://", 0) == 0) candidate = bare;
      }
    }
    return std::nullopt;
  };

  out.documentation_url = resolve_url("documentation_url");
  out.server_url = resolve_url("server_url");
  return out;
}

nlohmann::json fetch_payload_example(LlmGateway& gateway, const std::string& api_name,
                                     const std::string& route, HttpMethod method) {
  PromptContext ctx;
  ctx.api_name = api_name;
  ctx.route = route;
  ctx.method = to_string(method);
  Completion completion = gateway.complete(PromptKind::PayloadExample, ctx);
  if (auto obj = extract_first_json_object(completion.text)) return *obj;
  return nlohmann::json::object();
}

std::string fetch_description(LlmGateway& gateway, const std::string& api_name,
                              const std::string& subject) {
  PromptContext ctx;
  ctx.api_name = api_name;
  ctx.subject = subject;
  Completion completion = gateway.complete(PromptKind::Description, ctx);
  return trim(completion.text);
}

}  // namespace restinfer
