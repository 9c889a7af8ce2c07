#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace restinfer {

enum class HttpMethod { Get, Post, Put, Patch, Delete };

std::string to_string(HttpMethod m);
std::optional<HttpMethod> parse_method(const std::string& s);

/// Raised by parse_request on input that is not a recognizable request string.
struct MalformedRequest : std::runtime_error {
  explicit MalformedRequest(const std::string& what) : std::runtime_error(what) {}
};

/// One name=value query pair. Values may be empty; names may repeat across pairs.
struct QueryParam {
  std::string name;
  std::string value;

  friend bool operator==(const QueryParam&, const QueryParam&) = default;
};

/// Structured HTTP request against one API. Percent-encoding in segments and
/// values is preserved verbatim; nothing is ever re-encoded.
struct ApiRequest {
  HttpMethod method = HttpMethod::Get;
  std::string base_url;
  std::vector<std::string> path_segments;
  std::vector<QueryParam> query_params;
  std::optional<nlohmann::json> body;  // only for POST/PUT/PATCH

  friend bool operator==(const ApiRequest&, const ApiRequest&) = default;
};

enum class MaskTokenKind { Route, ParamPair, ParamName, ParamValue };

/// The literal placeholder text for a mask token kind.
std::string mask_token_text(MaskTokenKind kind);

/// Split a raw request string into segments and query pairs. `raw` must start
/// with `/`, with `?` (empty path), or with `base_url`; the query section uses
/// `?` then `&`-separated `name=value` pairs. Source order and percent-encoding
/// are preserved.
ApiRequest parse_request(const std::string& raw, const std::string& base_url,
                         HttpMethod method = HttpMethod::Get);

/// Path + query rendered relative to the base URL (leading `/` when the path
/// is nonempty, leading `?` when only a query is present, empty for the root).
std::string render_relative(const ApiRequest& req);

/// Full URL: base_url + render_relative.
std::string render(const ApiRequest& req);

/// Dedup identity: same method, same normalized path (scheme/host lowercased),
/// and the same multiset of query pairs collapse to one key.
std::string canonical_key(const ApiRequest& req);

/// Replace every all-digit segment with the `{id}` placeholder.
std::vector<std::string> generalize_id_segments(const std::vector<std::string>& segments);

/// Generalized path string for a request, always starting with `/`.
std::string generalized_path(const ApiRequest& req);

enum class TypeTag { Integer, Number, Boolean, Array, String };

std::string to_string(TypeTag tag);

/// Classify a raw parameter value: decimal integer, decimal float, true/false,
/// comma-separated list of two or more items, or plain string.
TypeTag infer_value_type(const std::string& value);

/// Most general of two observed tags: equal stays, integer/number widen to
/// number, anything else widens to string.
TypeTag widen_type(TypeTag a, TypeTag b);

/// Typed JSON form of a raw value under the given tag (used for OAS examples).
nlohmann::json typed_example(const std::string& value, TypeTag tag);

}  // namespace restinfer
