#include "restinfer/verdict.hpp"

#include <array>
#include <cctype>

namespace restinfer {

std::string to_string(VerdictClass c) {
  switch (c) {
    case VerdictClass::Valid: return "Valid";
    case VerdictClass::ClientError: return "ClientError";
    case VerdictClass::ServerError: return "ServerError";
    case VerdictClass::SoftError: return "SoftError";
  }
  return "Valid";
}

std::string to_string(VerdictReason r) {
  switch (r) {
    case VerdictReason::StatusRange: return "StatusRange";
    case VerdictReason::KeywordMatch: return "KeywordMatch";
    case VerdictReason::HtmlBody: return "HtmlBody";
    case VerdictReason::None: return "None";
  }
  return "None";
}

namespace {

std::string lower(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

bool starts_with_ci(const std::string& haystack, std::size_t offset, const char* prefix) {
  for (std::size_t i = 0; prefix[i] != '\0'; ++i) {
    if (offset + i >= haystack.size()) return false;
    if (std::tolower(static_cast<unsigned char>(haystack[offset + i])) != prefix[i]) return false;
  }
  return true;
}

}  // namespace

std::optional<std::size_t> utf8_length(const std::string& bytes) {
  std::size_t count = 0;
  std::size_t i = 0;
  while (i < bytes.size()) {
    unsigned char b = static_cast<unsigned char>(bytes[i]);
    std::size_t extra;
    unsigned long cp;
    if (b < 0x80) {
      extra = 0;
      cp = b;
    } else if ((b & 0xE0) == 0xC0) {
      extra = 1;
      cp = b & 0x1Fu;
    } else if ((b & 0xF0) == 0xE0) {
      extra = 2;
      cp = b & 0x0Fu;
    } else if ((b & 0xF8) == 0xF0) {
      extra = 3;
      cp = b & 0x07u;
    } else {
      return std::nullopt;
    }
    if (i + extra >= bytes.size()) return std::nullopt;
    for (std::size_t k = 1; k <= extra; ++k) {
      unsigned char cont = static_cast<unsigned char>(bytes[i + k]);
      if ((cont & 0xC0) != 0x80) return std::nullopt;
      cp = (cp << 6) | (cont & 0x3Fu);
    }
    // Reject overlong encodings, surrogates, and out-of-range code points.
    if (extra == 1 && cp < 0x80) return std::nullopt;
    if (extra == 2 && cp < 0x800) return std::nullopt;
    if (extra == 3 && cp < 0x10000) return std::nullopt;
    if (cp >= 0xD800 && cp <= 0xDFFF) return std::nullopt;
    if (cp > 0x10FFFF) return std::nullopt;
    i += extra + 1;
    ++count;
  }
  return count;
}

bool is_html(const ApiResponse& resp) {
  if (resp.content_type && lower(*resp.content_type).find("text/html") != std::string::npos)
    return true;
  if (!utf8_length(resp.body)) return false;  // undecodable bodies skip the sniff
  std::size_t i = 0;
  while (i < resp.body.size() && std::isspace(static_cast<unsigned char>(resp.body[i]))) ++i;
  return starts_with_ci(resp.body, i, "<!doctype html") || starts_with_ci(resp.body, i, "<html");
}

Verdict classify_response(const ApiResponse& resp) {
  if (resp.status >= 500 && resp.status <= 599)
    return {VerdictClass::ServerError, VerdictReason::StatusRange};
  if (resp.status >= 400 && resp.status <= 499)
    return {VerdictClass::ClientError, VerdictReason::StatusRange};
  if (resp.status < 200 || resp.status > 299)
    return {VerdictClass::ClientError, VerdictReason::StatusRange};

  if (is_html(resp)) return {VerdictClass::SoftError, VerdictReason::HtmlBody};

  auto length = utf8_length(resp.body);
  if (length && *length < 200) {
    static const std::array<const char*, 4> keywords = {"error", "not found", "invalid",
                                                        "incorrect"};
    std::string low = lower(resp.body);
    for (const char* kw : keywords) {
      if (low.find(kw) != std::string::npos)
        return {VerdictClass::SoftError, VerdictReason::KeywordMatch};
    }
  }
  return {VerdictClass::Valid, VerdictReason::None};
}

ErrorSchemaSample probe_default_error_schema(const std::string& base_url, const SendFn& sender) {
  ApiRequest req = parse_request("/invalidRoute?invalidParam=invalidValue", base_url);
  ApiResponse resp = sender(req);
  return {resp.status, resp.content_type, resp.body};
}

}  // namespace restinfer
