#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "restinfer/config.hpp"
#include "restinfer/request.hpp"

namespace restinfer {

enum class PromptKind { BaseData, RouteList, ParamList, MaskFill, PayloadExample, Description };

std::string to_string(PromptKind kind);

struct MissingContext : std::runtime_error {
  explicit MissingContext(const std::string& what) : std::runtime_error(what) {}
};

struct BackendUnavailable : std::runtime_error {
  explicit BackendUnavailable(const std::string& what) : std::runtime_error(what) {}
};

struct TokenUsage {
  long long input_tokens = 0;
  long long output_tokens = 0;

  TokenUsage& operator+=(const TokenUsage& other) {
    input_tokens += other.input_tokens;
    output_tokens += other.output_tokens;
    return *this;
  }
  friend bool operator==(const TokenUsage&, const TokenUsage&) = default;
};

struct Completion {
  std::string text;
  TokenUsage usage;
};

/// Context record for prompt construction. Only the fields a kind requires
/// are read; missing required fields raise MissingContext.
struct PromptContext {
  std::string api_name;
  std::optional<std::string> route;            // PARAM_LIST, PAYLOAD_EXAMPLE
  std::optional<std::string> masked_template;  // MASK_FILL
  std::optional<std::string> token;            // MASK_FILL (mask token literal)
  std::optional<std::string> subject;          // DESCRIPTION
  std::optional<std::string> method;           // PAYLOAD_EXAMPLE
  std::optional<std::string> previous_invalid; // BASE_DATA retries
  std::optional<std::string> field;            // BASE_DATA retries
  int attempt = 1;
};

struct BuiltPrompt {
  std::string text;
  std::string digest;  // stable key: kind + the context fields that matter
};

BuiltPrompt build_prompt(PromptKind kind, const PromptContext& ctx);

/// Pluggable completion source. One capability: text in, text + usage out.
class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual std::string identifier() const = 0;
  virtual Completion complete(const std::string& prompt_text, double temperature,
                              const std::string& digest) = 0;
};

/// Deterministic fixture-driven backend. Fixture format:
///   {"completions": {"<digest>": {"text": "...", "input_tokens": n,
///    "output_tokens": n}}, "default": {...}}
/// Unknown digests fall back to "default", else to an empty completion.
class ScriptedBackend : public LlmBackend {
 public:
  static ScriptedBackend from_file(const std::string& path);
  explicit ScriptedBackend(nlohmann::json fixture);

  std::string identifier() const override { return "scripted"; }
  Completion complete(const std::string& prompt_text, double temperature,
                      const std::string& digest) override;

 private:
  nlohmann::json fixture_;
};

/// Chat-completion HTTP backend. `endpoint_spec` is `<endpoint-url>#<model-id>`;
/// the bearer credential comes from the environment variable named in config.
class HttpChatBackend : public LlmBackend {
 public:
  HttpChatBackend(const std::string& endpoint_spec, const std::optional<std::string>& key_env);

  std::string identifier() const override { return model_; }
  Completion complete(const std::string& prompt_text, double temperature,
                      const std::string& digest) override;

 private:
  std::string endpoint_;
  std::string path_;
  std::string model_;
  std::string api_key_;
};

std::shared_ptr<LlmBackend> make_backend(const RunConfig& config,
                                         const std::optional<std::string>& fixture_path);

/// Builds prompts, consults a per-run completion cache (keyed by prompt
/// text), forwards misses to the backend, and accumulates token usage.
class LlmGateway {
 public:
  LlmGateway(std::shared_ptr<LlmBackend> backend, double temperature, bool cache_enabled = true);

  Completion complete(PromptKind kind, const PromptContext& ctx);

  const TokenUsage& usage() const { return usage_; }
  long long calls_made() const { return calls_made_; }

 private:
  std::shared_ptr<LlmBackend> backend_;
  double temperature_;
  bool cache_enabled_;
  std::map<std::string, Completion> cache_;
  TokenUsage usage_;
  long long calls_made_ = 0;
};

/// Lenient completion-to-list parsing: JSON array anywhere in the text, then
/// a bracketed comma list, then bullet-stripped lines. Items are trimmed,
/// deduplicated in order; empties and mask token literals are dropped.
std::vector<std::string> parse_value_list(const std::string& raw);

/// First parseable JSON object embedded in the text, or nullopt.
std::optional<nlohmann::json> extract_first_json_object(const std::string& raw);

struct BaseData {
  std::string description;
  std::optional<std::string> documentation_url;
  std::optional<std::string> server_url;
};

using UrlProber = std::function<bool(const std::string& url)>;

/// Asks for description plus two URLs; each URL is probed and re-asked with
/// invalidity context on failure, at most 3 attempts per field. Fields that
/// never validate are left absent.
BaseData fetch_base_data(LlmGateway& gateway, const std::string& api_name, const UrlProber& probe);

/// Example request payload for a write method; empty object when the model
/// yields nothing parseable.
nlohmann::json fetch_payload_example(LlmGateway& gateway, const std::string& api_name,
                                     const std::string& route, HttpMethod method);

/// One-sentence description of a route, parameter, or the API itself.
std::string fetch_description(LlmGateway& gateway, const std::string& api_name,
                              const std::string& subject);

}  // namespace restinfer
