#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace restinfer {

struct ConfigParseError : std::runtime_error {
  explicit ConfigParseError(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigValidationError : std::runtime_error {
  explicit ConfigValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Per-API run settings loaded from the JSON config file.
struct RunConfig {
  std::string api_name;
  std::optional<std::string> server_url;
  std::optional<std::pair<std::string, std::string>> api_key_param;
  long long rate_limit_ms = 1000;
  double temperature = 0.7;
  bool descriptions = false;
  std::vector<std::string> manual_seeds;
  std::string llm_backend = "scripted";
  std::optional<std::string> llm_key_env;
  int max_iterations = 10;

  // Pricing in currency units per 1M tokens; used for the model-cost metric.
  double price_input_per_1m = 0.0;
  double price_output_per_1m = 0.0;

  // Seed selection mode for the random-mutation strategy.
  std::string seed_selection = "random-route";
};

/// Parse one config object or an array of them; validates each entry and
/// applies defaults. Throws ConfigParseError on malformed JSON and
/// ConfigValidationError (message includes the field path) on bad values.
std::vector<RunConfig> load_config(const std::string& path);

/// Same as load_config but from an in-memory JSON document string.
std::vector<RunConfig> parse_config_text(const std::string& text);

}  // namespace restinfer
