#include "restinfer/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace restinfer {

namespace {

using nlohmann::json;

std::string field_path(std::size_t index, const char* field) {
  return "[" + std::to_string(index) + "]." + field;
}

RunConfig parse_entry(const json& obj, std::size_t index) {
  if (!obj.is_object())
    throw ConfigValidationError("[" + std::to_string(index) + "]: entry must be an object");

  RunConfig cfg;

  auto require_string = [&](const char* field) -> std::string {
    if (!obj.contains(field) || !obj.at(field).is_string())
      throw ConfigValidationError(field_path(index, field) + ": required string");
    return obj.at(field).get<std::string>();
  };

  cfg.api_name = require_string("api_name");
  if (cfg.api_name.empty())
    throw ConfigValidationError(field_path(index, "api_name") + ": must be non-empty");

  if (obj.contains("server_url")) {
    if (!obj.at("server_url").is_string())
      throw ConfigValidationError(field_path(index, "server_url") + ": must be a string");
    std::string url = obj.at("server_url").get<std::string>();
    if (url.rfind("http://", 0) != 0 && url.rfind("https://", 0) != 0)
      throw ConfigValidationError(field_path(index, "server_url") +
                                  ": must be an absolute http(s) URL");
    cfg.server_url = url;
  }

  bool has_key_name = obj.contains("api_key_name");
  bool has_key_value = obj.contains("api_key_value");
  if (has_key_name != has_key_value)
    throw ConfigValidationError(field_path(index, "api_key_name") +
                                ": api_key_name and api_key_value must appear together");
  if (has_key_name) {
    if (!obj.at("api_key_name").is_string() || !obj.at("api_key_value").is_string())
      throw ConfigValidationError(field_path(index, "api_key_name") + ": must be strings");
    cfg.api_key_param = {obj.at("api_key_name").get<std::string>(),
                         obj.at("api_key_value").get<std::string>()};
  }

  if (obj.contains("rate_limit_ms")) {
    if (!obj.at("rate_limit_ms").is_number_integer())
      throw ConfigValidationError(field_path(index, "rate_limit_ms") + ": must be an integer");
    cfg.rate_limit_ms = obj.at("rate_limit_ms").get<long long>();
    if (cfg.rate_limit_ms < 0)
      throw ConfigValidationError(field_path(index, "rate_limit_ms") + ": must be >= 0");
  }

  if (obj.contains("temperature")) {
    if (!obj.at("temperature").is_number())
      throw ConfigValidationError(field_path(index, "temperature") + ": must be a number");
    cfg.temperature = obj.at("temperature").get<double>();
    if (cfg.temperature < 0.0 || cfg.temperature > 2.0)
      throw ConfigValidationError(field_path(index, "temperature") + ": must be in [0,2]");
  }

  if (obj.contains("descriptions")) {
    if (!obj.at("descriptions").is_boolean())
      throw ConfigValidationError(field_path(index, "descriptions") + ": must be a boolean");
    cfg.descriptions = obj.at("descriptions").get<bool>();
  }

  if (obj.contains("seeds")) {
    if (!obj.at("seeds").is_array())
      throw ConfigValidationError(field_path(index, "seeds") + ": must be an array of strings");
    for (const auto& s : obj.at("seeds")) {
      if (!s.is_string())
        throw ConfigValidationError(field_path(index, "seeds") + ": must be an array of strings");
      cfg.manual_seeds.push_back(s.get<std::string>());
    }
  }

  if (obj.contains("llm_backend")) {
    if (!obj.at("llm_backend").is_string())
      throw ConfigValidationError(field_path(index, "llm_backend") + ": must be a string");
    cfg.llm_backend = obj.at("llm_backend").get<std::string>();
  }

  if (obj.contains("llm_key_env")) {
    if (!obj.at("llm_key_env").is_string())
      throw ConfigValidationError(field_path(index, "llm_key_env") + ": must be a string");
    cfg.llm_key_env = obj.at("llm_key_env").get<std::string>();
  }

  if (obj.contains("max_iterations")) {
    if (!obj.at("max_iterations").is_number_integer())
      throw ConfigValidationError(field_path(index, "max_iterations") + ": must be an integer");
    cfg.max_iterations = obj.at("max_iterations").get<int>();
    if (cfg.max_iterations < 1)
      throw ConfigValidationError(field_path(index, "max_iterations") + ": must be >= 1");
  }

  auto read_price = [&](const char* field, double& target) {
    if (!obj.contains(field)) return;
    if (!obj.at(field).is_number())
      throw ConfigValidationError(field_path(index, field) + ": must be a number");
    target = obj.at(field).get<double>();
    if (target < 0.0) throw ConfigValidationError(field_path(index, field) + ": must be >= 0");
  };
  read_price("price_input_per_1m", cfg.price_input_per_1m);
  read_price("price_output_per_1m", cfg.price_output_per_1m);

  if (obj.contains("seed_selection")) {
    if (!obj.at("seed_selection").is_string())
      throw ConfigValidationError(field_path(index, "seed_selection") + ": must be a string");
    cfg.seed_selection = obj.at("seed_selection").get<std::string>();
    if (cfg.seed_selection != "random-seed" && cfg.seed_selection != "random-route")
      throw ConfigValidationError(field_path(index, "seed_selection") +
                                  ": must be random-seed or random-route");
  }

  return cfg;
}

}  // namespace

std::vector<RunConfig> parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigParseError(std::string("config is not valid JSON: ") + e.what());
  }

  std::vector<RunConfig> configs;
  if (doc.is_array()) {
    if (doc.empty()) throw ConfigValidationError("config array must not be empty");
    for (std::size_t i = 0; i < doc.size(); ++i) configs.push_back(parse_entry(doc[i], i));
  } else {
    configs.push_back(parse_entry(doc, 0));
  }
  return configs;
}

std::vector<RunConfig> load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigParseError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace restinfer
