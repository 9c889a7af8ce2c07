#include "restinfer/request.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

namespace restinfer {

std::string to_string(HttpMethod m) {
  switch (m) {
    case HttpMethod::Get: return "GET";
    case HttpMethod::Post: return "POST";
    case HttpMethod::Put: return "PUT";
    case HttpMethod::Patch: return "PATCH";
    case HttpMethod::Delete: return "DELETE";
  }
  return "GET";
}

std::optional<HttpMethod> parse_method(const std::string& s) {
  std::string up;
  up.reserve(s.size());
  for (char c : s) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (up == "GET") return HttpMethod::Get;
  if (up == "POST") return HttpMethod::Post;
  if (up == "PUT") return HttpMethod::Put;
  if (up == "PATCH") return HttpMethod::Patch;
  if (up == "DELETE") return HttpMethod::Delete;
  return std::nullopt;
}

std::string mask_token_text(MaskTokenKind kind) {
  switch (kind) {
    case MaskTokenKind::Route: return "<route>";
    case MaskTokenKind::ParamPair: return "<parameter=value>";
    case MaskTokenKind::ParamName: return "<parameter>";
    case MaskTokenKind::ParamValue: return "<value>";
  }
  return "<route>";
}

namespace {

std::string lower(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

// Lowercase the scheme and host of a URL, leaving any path suffix intact.
std::string normalize_base(const std::string& base) {
  auto scheme_end = base.find("://");
  if (scheme_end == std::string::npos) return lower(base);
  auto host_end = base.find('/', scheme_end + 3);
  if (host_end == std::string::npos) return lower(base);
  return lower(base.substr(0, host_end)) + base.substr(host_end);
}

}  // namespace

ApiRequest parse_request(const std::string& raw, const std::string& base_url, HttpMethod method) {
  std::string rest = raw;
  bool stripped_base = false;
  if (!base_url.empty() && !raw.empty() && rest.rfind(base_url, 0) == 0) {
    rest = rest.substr(base_url.size());
    stripped_base = true;
  }
  if (rest.empty()) {
    if (!stripped_base) throw MalformedRequest("empty request string");
    ApiRequest req;
    req.method = method;
    req.base_url = base_url;
    return req;
  }
  if (rest[0] != '/' && rest[0] != '?') {
    throw MalformedRequest("request must start with '/' or '?': " + raw);
  }

  ApiRequest req;
  req.method = method;
  req.base_url = base_url;

  std::string path_part = rest;
  std::string query_part;
  if (auto qpos = rest.find('?'); qpos != std::string::npos) {
    path_part = rest.substr(0, qpos);
    query_part = rest.substr(qpos + 1);
  }

  std::stringstream path_stream(path_part);
  std::string segment;
  while (std::getline(path_stream, segment, '/')) {
    if (!segment.empty()) req.path_segments.push_back(segment);
  }

  if (!query_part.empty()) {
    std::stringstream query_stream(query_part);
    std::string pair;
    while (std::getline(query_stream, pair, '&')) {
      if (pair.empty()) continue;
      auto eq = pair.find('=');
      if (eq == std::string::npos) {
        throw MalformedRequest("query pair without '=': " + pair);
      }
      req.query_params.push_back({pair.substr(0, eq), pair.substr(eq + 1)});
    }
  }
  return req;
}

std::string render_relative(const ApiRequest& req) {
  std::string out;
  for (const auto& seg : req.path_segments) {
    out += '/';
    out += seg;
  }
  if (!req.query_params.empty()) {
    out += '?';
    for (std::size_t i = 0; i < req.query_params.size(); ++i) {
      if (i > 0) out += '&';
      out += req.query_params[i].name;
      out += '=';
      out += req.query_params[i].value;
    }
  }
  return out;
}

std::string render(const ApiRequest& req) { return req.base_url + render_relative(req); }

std::string canonical_key(const ApiRequest& req) {
  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(req.query_params.size());
  for (const auto& p : req.query_params) pairs.emplace_back(p.name, p.value);
  std::sort(pairs.begin(), pairs.end());

  nlohmann::json key = nlohmann::json::array();
  key.push_back(to_string(req.method));
  key.push_back(normalize_base(req.base_url));
  key.push_back(req.path_segments);
  nlohmann::json jpairs = nlohmann::json::array();
  for (const auto& [n, v] : pairs) jpairs.push_back({n, v});
  key.push_back(std::move(jpairs));
  return key.dump();
}

namespace {

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isdigit(c) != 0; });
}

}  // namespace

std::vector<std::string> generalize_id_segments(const std::vector<std::string>& segments) {
  std::vector<std::string> out;
  out.reserve(segments.size());
  for (const auto& seg : segments) {
    out.push_back(all_digits(seg) ? "{id}" : seg);
  }
  return out;
}

std::string generalized_path(const ApiRequest& req) {
  std::string out;
  for (const auto& seg : generalize_id_segments(req.path_segments)) {
    out += '/';
    out += seg;
  }
  if (out.empty()) out = "/";
  return out;
}

std::string to_string(TypeTag tag) {
  switch (tag) {
    case TypeTag::Integer: return "integer";
    case TypeTag::Number: return "number";
    case TypeTag::Boolean: return "boolean";
    case TypeTag::Array: return "array";
    case TypeTag::String: return "string";
  }
  return "string";
}

namespace {

bool is_integer_literal(const std::string& s) {
  std::size_t i = (s.size() > 1 && (s[0] == '-' || s[0] == '+')) ? 1 : 0;
  if (i >= s.size()) return false;
  return std::all_of(s.begin() + static_cast<std::ptrdiff_t>(i), s.end(),
                     [](unsigned char c) { return std::isdigit(c) != 0; });
}

bool is_number_literal(const std::string& s) {
  std::size_t i = (s.size() > 1 && (s[0] == '-' || s[0] == '+')) ? 1 : 0;
  bool seen_digit = false, seen_dot = false;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      seen_digit = true;
    } else if (c == '.' && !seen_dot) {
      seen_dot = true;
    } else {
      return false;
    }
  }
  return seen_digit && seen_dot;
}

}  // namespace

TypeTag infer_value_type(const std::string& value) {
  if (is_integer_literal(value)) return TypeTag::Integer;
  if (is_number_literal(value)) return TypeTag::Number;
  std::string low = lower(value);
  if (low == "true" || low == "false") return TypeTag::Boolean;
  if (value.find(',') != std::string::npos) {
    // Two or more nonempty items separated by commas.
    std::stringstream ss(value);
    std::string item;
    int items = 0;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) return TypeTag::String;
      ++items;
    }
    if (items >= 2 && value.back() != ',') return TypeTag::Array;
    return TypeTag::String;
  }
  return TypeTag::String;
}

TypeTag widen_type(TypeTag a, TypeTag b) {
  if (a == b) return a;
  auto numeric = [](TypeTag t) { return t == TypeTag::Integer || t == TypeTag::Number; };
  if (numeric(a) && numeric(b)) return TypeTag::Number;
  return TypeTag::String;
}

nlohmann::json typed_example(const std::string& value, TypeTag tag) {
  switch (tag) {
    case TypeTag::Integer: {
      long long v = 0;
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec == std::errc{} && p == value.data() + value.size()) return v;
      return value;
    }
    case TypeTag::Number: {
      try {
        return std::stod(value);
      } catch (const std::exception&) {
        return value;
      }
    }
    case TypeTag::Boolean:
      return lower(value) == "true";
    case TypeTag::Array: {
      nlohmann::json arr = nlohmann::json::array();
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) arr.push_back(item);
      return arr;
    }
    case TypeTag::String:
      return value;
  }
  return value;
}

}  // namespace restinfer
