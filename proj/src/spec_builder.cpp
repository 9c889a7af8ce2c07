#include "restinfer/spec_builder.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

namespace restinfer {

namespace {

constexpr std::size_t kExampleBodyCap = 4096;
constexpr std::size_t kDescriptionCap = 300;

// Truncate to a byte budget without splitting a UTF-8 sequence.
std::string truncate_utf8(const std::string& s, std::size_t max_bytes) {
  if (s.size() <= max_bytes) return s;
  std::size_t end = max_bytes;
  while (end > 0 && (static_cast<unsigned char>(s[end]) & 0xC0) == 0x80) --end;
  return s.substr(0, end);
}

std::string truncate_chars(const std::string& s, std::size_t max_chars) {
  std::size_t count = 0, i = 0;
  while (i < s.size() && count < max_chars) {
    unsigned char b = static_cast<unsigned char>(s[i]);
    std::size_t step = b < 0x80 ? 1 : (b & 0xE0) == 0xC0 ? 2 : (b & 0xF0) == 0xE0 ? 3 : 4;
    i += step;
    ++count;
  }
  return s.substr(0, std::min(i, s.size()));
}

std::string media_type_of(const std::optional<std::string>& content_type,
                          const std::string& fallback) {
  if (!content_type || content_type->empty()) return fallback;
  auto semi = content_type->find(';');
  std::string mt = content_type->substr(0, semi);
  while (!mt.empty() && std::isspace(static_cast<unsigned char>(mt.back()))) mt.pop_back();
  return mt.empty() ? fallback : mt;
}

// Example value for a body: parsed JSON when it parses within the size cap,
// the (capped) text when UTF-8, null when binary.
nlohmann::json body_example(const std::string& body) {
  if (!utf8_length(body)) return nullptr;
  if (body.size() <= kExampleBodyCap) {
    nlohmann::json parsed = nlohmann::json::parse(body, nullptr, false);
    if (!parsed.is_discarded()) return parsed;
  }
  return truncate_utf8(body, kExampleBodyCap);
}

}  // namespace

ChangeSummary record_valid(SpecDocument& doc, const ApiRequest& req, const ApiResponse& resp) {
  ChangeSummary change;
  std::string path = generalized_path(req);

  auto [path_it, path_created] = doc.paths.try_emplace(path);
  PathEntry& entry = path_it->second;
  change.new_route = path_created;

  auto [op_it, op_created] = entry.operations.try_emplace(req.method);
  OperationEntry& op = op_it->second;
  if (op_created) {
    op.success_status = resp.status;
    op.response_example = body_example(resp.body);
    op.response_content_type =
        media_type_of(resp.content_type, op.response_example.is_null() ? "application/octet-stream"
                                                                       : "application/json");
    if (req.body && !req.body->is_null() &&
        (req.method == HttpMethod::Post || req.method == HttpMethod::Put ||
         req.method == HttpMethod::Patch)) {
      op.request_body_example = *req.body;
    }
  }

  for (const auto& pair : req.query_params) {
    auto [param_it, param_created] = op.parameters.try_emplace(pair.name);
    ParamEntry& param = param_it->second;
    if (param_created) {
      param.name = pair.name;
      param.type_tag = infer_value_type(pair.value);
      param.example_values.push_back(pair.value);
      ++change.new_params;
    } else if (std::find(param.example_values.begin(), param.example_values.end(), pair.value) ==
               param.example_values.end()) {
      param.example_values.push_back(pair.value);
      param.type_tag = widen_type(param.type_tag, infer_value_type(pair.value));
      ++change.new_values;
    }
  }

  // Digit segments become {id} path parameters; keep their concrete values.
  std::size_t id_pos = 0;
  auto generalized = generalize_id_segments(req.path_segments);
  for (std::size_t i = 0; i < generalized.size(); ++i) {
    if (generalized[i] != "{id}") continue;
    if (entry.id_examples.size() <= id_pos) entry.id_examples.resize(id_pos + 1);
    auto& values = entry.id_examples[id_pos];
    if (std::find(values.begin(), values.end(), req.path_segments[i]) == values.end())
      values.push_back(req.path_segments[i]);
    ++id_pos;
  }
  return change;
}

bool record_invalid(SpecDocument& doc, const ApiRequest& req, const ApiResponse& resp) {
  auto path_it = doc.paths.find(generalized_path(req));
  if (path_it == doc.paths.end() || path_it->second.operations.empty()) return false;

  auto op_it = path_it->second.operations.find(req.method);
  if (op_it == path_it->second.operations.end()) op_it = path_it->second.operations.begin();
  OperationEntry& op = op_it->second;

  std::string media = media_type_of(resp.content_type, "");
  for (const auto& sample : op.invalid_behaviors) {
    if (sample.status == resp.status && media_type_of(sample.content_type, "") == media)
      return true;  // already represented
  }
  op.invalid_behaviors.push_back(
      {resp.status, resp.content_type, truncate_utf8(resp.body, kExampleBodyCap)});
  return true;
}

namespace {

nlohmann::json schema_for(TypeTag tag) {
  nlohmann::json schema = {{"type", to_string(tag)}};
  if (tag == TypeTag::Array) schema["items"] = {{"type", "string"}};
  return schema;
}

void attach_examples(nlohmann::json& param, const ParamEntry& entry) {
  if (entry.example_values.empty()) return;
  if (entry.example_values.size() == 1) {
    param["example"] = typed_example(entry.example_values[0], entry.type_tag);
    return;
  }
  nlohmann::json examples = nlohmann::json::object();
  for (std::size_t i = 0; i < entry.example_values.size(); ++i) {
    examples["example" + std::to_string(i + 1)] = {
        {"value", typed_example(entry.example_values[i], entry.type_tag)}};
  }
  param["examples"] = examples;
}

// Rename repeated {id} placeholders so each path parameter is unique.
std::pair<std::string, std::vector<std::string>> emit_path_key(const std::string& path) {
  std::string out;
  std::vector<std::string> param_names;
  std::size_t pos = 0, count = 0;
  while (true) {
    auto hit = path.find("{id}", pos);
    if (hit == std::string::npos) {
      out += path.substr(pos);
      break;
    }
    out += path.substr(pos, hit - pos);
    ++count;
    std::string name = count == 1 ? "id" : "id" + std::to_string(count);
    out += "{" + name + "}";
    param_names.push_back(name);
    pos = hit + 4;
  }
  return {out, param_names};
}

nlohmann::json response_entry(int status, const std::optional<std::string>& content_type,
                              const std::string& body, const std::string& description) {
  nlohmann::json entry = {{"description", description}};
  nlohmann::json example = body_example(body);
  std::string media =
      media_type_of(content_type, example.is_null() ? "application/octet-stream" : "text/plain");
  if (example.is_null()) {
    entry["content"] = {{media, nlohmann::json::object()}};
  } else {
    entry["content"] = {{media, {{"example", example}}}};
  }
  return entry;
}

}  // namespace

nlohmann::json to_openapi_json(const SpecDocument& doc) {
  nlohmann::json out = {
      {"openapi", "3.0.3"},
      {"info", {{"title", doc.title}, {"version", "1.0.0"}}},
      {"paths", nlohmann::json::object()},
  };
  if (doc.description && !doc.description->empty()) out["info"]["description"] = *doc.description;
  if (doc.documentation_url) out["externalDocs"] = {{"url", *doc.documentation_url}};
  if (!doc.servers.empty()) {
    out["servers"] = nlohmann::json::array();
    for (const auto& url : doc.servers) out["servers"].push_back({{"url", url}});
  }

  if (doc.default_error) {
    nlohmann::json default_entry =
        response_entry(doc.default_error->status, doc.default_error->content_type,
                       doc.default_error->body, "Default response to an invalid request.");
    out["components"]["responses"]["DefaultError"] = default_entry;
  }
  if (doc.api_key_name) {
    out["components"]["securitySchemes"]["ApiKeyQuery"] = {
        {"type", "apiKey"}, {"in", "query"}, {"name", *doc.api_key_name}};
    out["security"] = nlohmann::json::array({{{"ApiKeyQuery", nlohmann::json::array()}}});
  }

  for (const auto& [path, entry] : doc.paths) {
    auto [path_key, id_names] = emit_path_key(path);
    nlohmann::json path_obj = nlohmann::json::object();
    if (entry.description) path_obj["description"] = *entry.description;

    if (!id_names.empty()) {
      nlohmann::json path_params = nlohmann::json::array();
      for (std::size_t i = 0; i < id_names.size(); ++i) {
        nlohmann::json param = {{"name", id_names[i]},
                                {"in", "path"},
                                {"required", true},
                                {"schema", {{"type", "integer"}}}};
        if (i < entry.id_examples.size() && !entry.id_examples[i].empty()) {
          param["example"] = typed_example(entry.id_examples[i][0], TypeTag::Integer);
        }
        path_params.push_back(param);
      }
      path_obj["parameters"] = path_params;
    }

    for (const auto& [method, op] : entry.operations) {
      nlohmann::json op_obj = nlohmann::json::object();
      if (op.description) op_obj["description"] = *op.description;

      if (!op.parameters.empty()) {
        nlohmann::json params = nlohmann::json::array();
        for (const auto& [name, param_entry] : op.parameters) {
          nlohmann::json param = {{"name", name},
                                  {"in", "query"},
                                  {"required", false},
                                  {"schema", schema_for(param_entry.type_tag)}};
          if (param_entry.description) param["description"] = *param_entry.description;
          attach_examples(param, param_entry);
          params.push_back(param);
        }
        op_obj["parameters"] = params;
      }

      if (op.request_body_example) {
        op_obj["requestBody"] = {
            {"content", {{"application/json", {{"example", *op.request_body_example}}}}}};
      }

      nlohmann::json responses = nlohmann::json::object();
      {
        nlohmann::json success = {{"description", "Successful response."}};
        if (op.response_example.is_null()) {
          success["content"] = {{op.response_content_type, nlohmann::json::object()}};
        } else {
          success["content"] = {{op.response_content_type, {{"example", op.response_example}}}};
        }
        responses[std::to_string(op.success_status)] = success;
      }
      for (const auto& sample : op.invalid_behaviors) {
        if (sample.status == op.success_status) continue;  // never clobber the success entry
        std::string key = std::to_string(sample.status);
        if (responses.contains(key)) continue;
        responses[key] = response_entry(sample.status, sample.content_type, sample.body,
                                        "Observed invalid-request behavior.");
      }
      if (doc.default_error) {
        responses["default"] = {{"$ref", "#/components/responses/DefaultError"}};
      }
      op_obj["responses"] = responses;

      std::string method_key = to_string(method);
      std::transform(method_key.begin(), method_key.end(), method_key.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      path_obj[method_key] = op_obj;
    }
    out["paths"][path_key] = path_obj;
  }
  return out;
}

std::string emit(const SpecDocument& doc, SpecFormat format) {
  nlohmann::json json_doc = to_openapi_json(doc);
  auto problems = validate_oas(json_doc);
  if (!problems.empty()) {
    std::string joined;
    for (const auto& p : problems) joined += (joined.empty() ? "" : "; ") + p;
    throw SerializationError("document failed structural validation: " + joined);
  }
  if (format == SpecFormat::Json) return json_doc.dump(2) + "\n";
  return json_to_yaml(json_doc);
}

namespace {

const std::set<std::string>& known_methods() {
  static const std::set<std::string> methods = {"get",     "put",   "post",  "delete",
                                                "options", "head",  "patch", "trace"};
  return methods;
}

void check_parameter(const nlohmann::json& param, const std::string& where,
                     std::vector<std::string>& problems, std::vector<std::string>& path_params) {
  if (!param.is_object()) {
    problems.push_back(where + ": parameter must be an object");
    return;
  }
  if (!param.contains("name") || !param.at("name").is_string()) {
    problems.push_back(where + ": parameter needs a string name");
    return;
  }
  if (!param.contains("in") || !param.at("in").is_string()) {
    problems.push_back(where + ": parameter needs an 'in' location");
    return;
  }
  std::string in = param.at("in").get<std::string>();
  if (in != "query" && in != "path" && in != "header" && in != "cookie") {
    problems.push_back(where + ": unknown parameter location " + in);
  }
  if (in == "path") {
    if (!param.contains("required") || param.at("required") != true) {
      problems.push_back(where + ": path parameter must set required=true");
    }
    path_params.push_back(param.at("name").get<std::string>());
  }
}

void check_responses(const nlohmann::json& responses, const std::string& where,
                     std::vector<std::string>& problems) {
  if (!responses.is_object() || responses.empty()) {
    problems.push_back(where + ": responses must be a non-empty object");
    return;
  }
  for (const auto& [code, entry] : responses.items()) {
    bool numeric = code.size() == 3 && std::isdigit(static_cast<unsigned char>(code[0])) &&
                   std::isdigit(static_cast<unsigned char>(code[1])) &&
                   std::isdigit(static_cast<unsigned char>(code[2]));
    if (!numeric && code != "default") {
      problems.push_back(where + ": response key must be a status code or 'default': " + code);
    }
    if (!entry.is_object()) {
      problems.push_back(where + "." + code + ": response must be an object");
      continue;
    }
    if (entry.contains("$ref")) continue;
    if (!entry.contains("description") || !entry.at("description").is_string()) {
      problems.push_back(where + "." + code + ": response needs a description");
    }
  }
}

std::vector<std::string> template_names(const std::string& path_key) {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while (true) {
    auto open = path_key.find('{', pos);
    if (open == std::string::npos) break;
    auto close = path_key.find('}', open);
    if (close == std::string::npos) break;
    names.push_back(path_key.substr(open + 1, close - open - 1));
    pos = close + 1;
  }
  return names;
}

}  // namespace

std::vector<std::string> validate_oas(const nlohmann::json& doc) {
  std::vector<std::string> problems;
  if (!doc.is_object()) return {"document must be a JSON object"};

  if (!doc.contains("openapi") || !doc.at("openapi").is_string() ||
      doc.at("openapi").get<std::string>().rfind("3.", 0) != 0) {
    problems.push_back("openapi field must be a string starting with '3.'");
  }
  if (!doc.contains("info") || !doc.at("info").is_object()) {
    problems.push_back("info object is required");
  } else {
    const auto& info = doc.at("info");
    if (!info.contains("title") || !info.at("title").is_string())
      problems.push_back("info.title must be a string");
    if (!info.contains("version") || !info.at("version").is_string())
      problems.push_back("info.version must be a string");
  }

  if (doc.contains("components") && doc.at("components").contains("responses")) {
    for (const auto& [name, entry] : doc.at("components").at("responses").items()) {
      if (!entry.is_object() || !entry.contains("description"))
        problems.push_back("components.responses." + name + ": response needs a description");
    }
  }

  if (!doc.contains("paths") || !doc.at("paths").is_object()) {
    problems.push_back("paths object is required");
    return problems;
  }

  for (const auto& [path_key, path_obj] : doc.at("paths").items()) {
    if (path_key.empty() || path_key[0] != '/') {
      problems.push_back("path key must start with '/': " + path_key);
    }
    if (!path_obj.is_object()) {
      problems.push_back(path_key + ": path entry must be an object");
      continue;
    }
    std::vector<std::string> declared_path_params;
    if (path_obj.contains("parameters")) {
      for (const auto& param : path_obj.at("parameters")) {
        check_parameter(param, path_key + ".parameters", problems, declared_path_params);
      }
    }
    bool any_operation = false;
    for (const auto& [field, op_obj] : path_obj.items()) {
      if (known_methods().count(field) == 0) continue;
      any_operation = true;
      std::string where = path_key + "." + field;
      if (!op_obj.is_object()) {
        problems.push_back(where + ": operation must be an object");
        continue;
      }
      std::vector<std::string> op_path_params = declared_path_params;
      if (op_obj.contains("parameters")) {
        for (const auto& param : op_obj.at("parameters")) {
          check_parameter(param, where + ".parameters", problems, op_path_params);
        }
      }
      if (!op_obj.contains("responses")) {
        problems.push_back(where + ": operation needs responses");
      } else {
        check_responses(op_obj.at("responses"), where + ".responses", problems);
      }
      for (const auto& name : template_names(path_key)) {
        if (std::find(op_path_params.begin(), op_path_params.end(), name) ==
            op_path_params.end()) {
          problems.push_back(where + ": path template {" + name +
                             "} has no declared path parameter");
        }
      }
    }
    if (!any_operation && !path_obj.contains("description") && !path_obj.contains("parameters")) {
      problems.push_back(path_key + ": path entry has no operations");
    }
  }

  // $ref targets must resolve within the document.
  std::function<void(const nlohmann::json&)> walk = [&](const nlohmann::json& node) {
    if (node.is_object()) {
      if (node.contains("$ref") && node.at("$ref").is_string()) {
        std::string ref = node.at("$ref").get<std::string>();
        if (ref.rfind("#/", 0) != 0) {
          problems.push_back("external $ref not supported: " + ref);
        } else {
          const nlohmann::json* cursor = &doc;
          std::stringstream ss(ref.substr(2));
          std::string part;
          bool ok = true;
          while (std::getline(ss, part, '/')) {
            if (!cursor->is_object() || !cursor->contains(part)) {
              ok = false;
              break;
            }
            cursor = &cursor->at(part);
          }
          if (!ok) problems.push_back("unresolvable $ref: " + ref);
        }
      }
      for (const auto& [k, v] : node.items()) {
        (void)k;
        walk(v);
      }
    } else if (node.is_array()) {
      for (const auto& v : node) walk(v);
    }
  };
  walk(doc);

  return problems;
}

void attach_descriptions(SpecDocument& doc, LlmGateway& gateway, const std::string& api_name) {
  try {
    if (!doc.description || doc.description->empty()) {
      std::string text = fetch_description(gateway, api_name, "the API itself");
      if (!text.empty()) doc.description = truncate_chars(text, kDescriptionCap);
    }
    for (auto& [path, entry] : doc.paths) {
      if (!entry.description) {
        std::string text =
            fetch_description(gateway, api_name, "the route \"" + path + "\"");
        if (!text.empty()) entry.description = truncate_chars(text, kDescriptionCap);
      }
      for (auto& [method, op] : entry.operations) {
        if (!op.description) {
          std::string text = fetch_description(
              gateway, api_name,
              "the " + to_string(method) + " operation on route \"" + path + "\"");
          if (!text.empty()) op.description = truncate_chars(text, kDescriptionCap);
        }
        for (auto& [name, param] : op.parameters) {
          if (param.description) continue;
          std::string text = fetch_description(
              gateway, api_name,
              "the query parameter \"" + name + "\" of the route \"" + path + "\"");
          if (!text.empty()) param.description = truncate_chars(text, kDescriptionCap);
        }
      }
    }
  } catch (const BackendUnavailable& e) {
    std::cerr << "warning: descriptions skipped, backend unavailable: " << e.what() << "\n";
  }
}

namespace {

bool yaml_plain_safe(const std::string& s) {
  if (s.empty()) return false;
  static const std::set<std::string> reserved = {"true", "false", "null", "yes", "no",
                                                 "on",   "off",   "~",    "y",  "n"};
  std::string low;
  for (char c : s) low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (reserved.count(low)) return false;
  // Anything number-like must stay quoted to keep its string type.
  if (s.find_first_not_of("0123456789+-.eE") == std::string::npos) return false;
  for (char c : s) {
    bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' ||
              c == '/' || c == ' ';
    if (!ok) return false;
  }
  return s.front() != ' ' && s.back() != ' ' && s.front() != '-';
}

std::string yaml_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\x%02x", static_cast<unsigned char>(c));
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
  return out;
}

std::string yaml_scalar(const nlohmann::json& value) {
  if (value.is_string()) {
    const auto& s = value.get_ref<const std::string&>();
    return yaml_plain_safe(s) ? s : yaml_quote(s);
  }
  return value.dump();  // numbers, booleans, null
}

void emit_yaml(const nlohmann::json& value, int indent, bool in_sequence_item,
               std::string& out) {
  std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  if (value.is_object()) {
    if (value.empty()) {
      out += in_sequence_item ? "{}\n" : pad + "{}\n";
      return;
    }
    bool first = true;
    for (const auto& [key, child] : value.items()) {
      std::string key_text = yaml_plain_safe(key) ? key : yaml_quote(key);
      std::string prefix = (in_sequence_item && first) ? "" : pad;
      if (child.is_object() && !child.empty()) {
        out += prefix + key_text + ":\n";
        emit_yaml(child, indent + 1, false, out);
      } else if (child.is_array() && !child.empty()) {
        out += prefix + key_text + ":\n";
        emit_yaml(child, indent + 1, false, out);
      } else if ((child.is_object() || child.is_array()) && child.empty()) {
        out += prefix + key_text + ": " + (child.is_object() ? "{}" : "[]") + "\n";
      } else {
        out += prefix + key_text + ": " + yaml_scalar(child) + "\n";
      }
      first = false;
    }
    return;
  }
  if (value.is_array()) {
    if (value.empty()) {
      out += in_sequence_item ? "[]\n" : pad + "[]\n";
      return;
    }
    for (const auto& child : value) {
      if (child.is_object() && !child.empty()) {
        out += pad + "- ";
        emit_yaml(child, indent + 1, true, out);
      } else if (child.is_array() && !child.empty()) {
        out += pad + "-\n";
        emit_yaml(child, indent + 1, false, out);
      } else if ((child.is_object() || child.is_array()) && child.empty()) {
        out += pad + "- " + (child.is_object() ? "{}" : "[]") + "\n";
      } else {
        out += pad + "- " + yaml_scalar(child) + "\n";
      }
    }
    return;
  }
  out += pad + yaml_scalar(value) + "\n";
}

}  // namespace

std::string json_to_yaml(const nlohmann::json& value) {
  std::string out;
  emit_yaml(value, 0, false, out);
  return out;
}

}  // namespace restinfer
