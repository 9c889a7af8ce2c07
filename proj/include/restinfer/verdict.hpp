#pragma once

#include <functional>
#include <optional>
#include <string>

#include "restinfer/request.hpp"

namespace restinfer {

/// Raw outcome of one HTTP exchange. Body bytes are kept as received;
/// decoding is attempted only where classification needs it.
struct ApiResponse {
  int status = 0;
  std::optional<std::string> content_type;
  std::string body;
  long long elapsed_ms = 0;
  std::optional<std::string> location;  // Location header, when present
};

enum class VerdictClass { Valid, ClientError, ServerError, SoftError };
enum class VerdictReason { StatusRange, KeywordMatch, HtmlBody, None };

std::string to_string(VerdictClass c);
std::string to_string(VerdictReason r);

struct Verdict {
  VerdictClass cls = VerdictClass::Valid;
  VerdictReason reason = VerdictReason::None;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

/// True iff the content type names text/html or the body, after leading
/// whitespace, starts case-insensitively with `<!doctype html` or `<html`.
/// The body sniff only applies to UTF-8 decodable bodies.
bool is_html(const ApiResponse& resp);

/// Number of Unicode scalar values in a UTF-8 string, or nullopt when the
/// bytes are not valid UTF-8.
std::optional<std::size_t> utf8_length(const std::string& bytes);

/// Total, deterministic response oracle:
///   5xx -> ServerError; 4xx -> ClientError; other non-2xx -> ClientError(StatusRange).
///   2xx -> SoftError(HtmlBody) when HTML, SoftError(KeywordMatch) when the
///   decoded body is shorter than 200 characters and contains an error
///   keyword, Valid otherwise.
Verdict classify_response(const ApiResponse& resp);

/// Response captured from the deliberately invalid probe request; reused as
/// the API's default error schema sample.
struct ErrorSchemaSample {
  int status = 0;
  std::optional<std::string> content_type;
  std::string body;
};

using SendFn = std::function<ApiResponse(const ApiRequest&)>;

/// Sends GET <base_url>/invalidRoute?invalidParam=invalidValue and returns
/// the response verbatim. Network errors propagate from the sender.
ErrorSchemaSample probe_default_error_schema(const std::string& base_url, const SendFn& sender);

}  // namespace restinfer
