#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "restinfer/llm.hpp"
#include "restinfer/request.hpp"
#include "restinfer/verdict.hpp"

namespace restinfer {

struct SerializationError : std::runtime_error {
  explicit SerializationError(const std::string& what) : std::runtime_error(what) {}
};

struct ParamEntry {
  std::string name;
  TypeTag type_tag = TypeTag::String;
  std::vector<std::string> example_values;  // ordered, duplicate-free, first is the example
  std::optional<std::string> description;
};

struct OperationEntry {
  int success_status = 200;
  nlohmann::json response_example;  // null when the body was binary
  std::string response_content_type;
  std::vector<ErrorSchemaSample> invalid_behaviors;  // deduplicated by status+content_type
  std::optional<nlohmann::json> request_body_example;
  std::map<std::string, ParamEntry> parameters;
  std::optional<std::string> description;
};

struct PathEntry {
  std::map<HttpMethod, OperationEntry> operations;
  // Observed values per {id} position, ordered and duplicate-free.
  std::vector<std::vector<std::string>> id_examples;
  std::optional<std::string> description;
};

/// Everything known about the API so far; serializes to OpenAPI 3.0.
struct SpecDocument {
  std::string title;
  std::optional<std::string> description;
  std::optional<std::string> documentation_url;
  std::vector<std::string> servers;
  std::map<std::string, PathEntry> paths;  // key = generalized path
  std::optional<ErrorSchemaSample> default_error;
  std::optional<std::string> api_key_name;  // query api-key scheme, when configured
};

struct ChangeSummary {
  bool new_route = false;
  int new_params = 0;
  int new_values = 0;
};

/// Merge one Valid request/response pair into the document. Idempotent for
/// a pair that is already fully represented.
ChangeSummary record_valid(SpecDocument& doc, const ApiRequest& req, const ApiResponse& resp);

/// Attach an invalid-behavior sample, but only when the request's
/// generalized path is already documented. Returns whether it applied.
bool record_invalid(SpecDocument& doc, const ApiRequest& req, const ApiResponse& resp);

/// OpenAPI 3.0 JSON form of the document (object keys sorted).
nlohmann::json to_openapi_json(const SpecDocument& doc);

enum class SpecFormat { Json, Yaml };

/// Serialized document; runs the structural lint first and throws
/// SerializationError if it reports problems.
std::string emit(const SpecDocument& doc, SpecFormat format);

/// Structural OpenAPI 3.0 lint. Returns human-readable problems; empty
/// means the document passed.
std::vector<std::string> validate_oas(const nlohmann::json& doc);

/// Fill in missing path/operation/parameter descriptions from the model,
/// truncated to 300 characters. Backend failure leaves the document as-is.
void attach_descriptions(SpecDocument& doc, LlmGateway& gateway, const std::string& api_name);

/// Conservative JSON-to-YAML rendering (keys already sorted by the JSON).
std::string json_to_yaml(const nlohmann::json& value);

}  // namespace restinfer
