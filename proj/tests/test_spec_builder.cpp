#include <doctest.h>

#include <memory>
#include <string>

#include "restinfer/spec_builder.hpp"

using namespace restinfer;
using nlohmann::json;

namespace {

const std::string kBase = "http://h";

ApiResponse ok_json(std::string body, int status = 200) {
  ApiResponse resp;
  resp.status = status;
  resp.content_type = "application/json; charset=utf-8";
  resp.body = std::move(body);
  return resp;
}

SpecDocument fresh_doc() {
  SpecDocument doc;
  doc.title = "demo";
  doc.servers = {"http://h"};
  return doc;
}

}  // namespace

TEST_CASE("record_valid creates paths, operations, and parameters once") {
  SpecDocument doc = fresh_doc();
  ApiRequest req = parse_request("/users/25?age=4&sort=asc", kBase);

  ChangeSummary first = record_valid(doc, req, ok_json(R"({"id": 25})"));
  CHECK(first.new_route);
  CHECK(first.new_params == 2);
  CHECK(first.new_values == 0);
  REQUIRE(doc.paths.count("/users/{id}") == 1);

  ChangeSummary again = record_valid(doc, req, ok_json(R"({"id": 25})"));
  CHECK_FALSE(again.new_route);
  CHECK(again.new_params == 0);
  CHECK(again.new_values == 0);

  const OperationEntry& op = doc.paths["/users/{id}"].operations.at(HttpMethod::Get);
  CHECK(op.success_status == 200);
  CHECK(op.response_content_type == "application/json");
  CHECK(op.response_example == json({{"id", 25}}));
  CHECK(op.parameters.at("age").type_tag == TypeTag::Integer);
  CHECK(op.parameters.at("sort").type_tag == TypeTag::String);
}

TEST_CASE("record_valid widens types and accumulates example values") {
  SpecDocument doc = fresh_doc();
  record_valid(doc, parse_request("/r?n=4", kBase), ok_json("{}"));

  ChangeSummary widened = record_valid(doc, parse_request("/r?n=4.5", kBase), ok_json("{}"));
  CHECK(widened.new_params == 0);
  CHECK(widened.new_values == 1);

  const ParamEntry& param = doc.paths["/r"].operations.at(HttpMethod::Get).parameters.at("n");
  CHECK(param.type_tag == TypeTag::Number);
  CHECK(param.example_values == std::vector<std::string>{"4", "4.5"});

  record_valid(doc, parse_request("/r?n=abc", kBase), ok_json("{}"));
  CHECK(doc.paths["/r"].operations.at(HttpMethod::Get).parameters.at("n").type_tag ==
        TypeTag::String);
}

TEST_CASE("record_valid tracks id examples per position") {
  SpecDocument doc = fresh_doc();
  record_valid(doc, parse_request("/users/25/posts/7", kBase), ok_json("{}"));
  record_valid(doc, parse_request("/users/31/posts/7", kBase), ok_json("{}"));

  const PathEntry& entry = doc.paths.at("/users/{id}/posts/{id}");
  REQUIRE(entry.id_examples.size() == 2);
  CHECK(entry.id_examples[0] == std::vector<std::string>{"25", "31"});
  CHECK(entry.id_examples[1] == std::vector<std::string>{"7"});
}

TEST_CASE("record_valid keeps write-method bodies and binary responses") {
  SpecDocument doc = fresh_doc();
  ApiRequest post = parse_request("/pets", kBase, HttpMethod::Post);
  post.body = json{{"name", "Rex"}};
  record_valid(doc, post, ok_json(R"({"id": 1})", 201));

  const OperationEntry& op = doc.paths["/pets"].operations.at(HttpMethod::Post);
  CHECK(op.success_status == 201);
  REQUIRE(op.request_body_example.has_value());
  CHECK(*op.request_body_example == json({{"name", "Rex"}}));

  ApiResponse binary;
  binary.status = 200;
  binary.body = std::string("\xff\xfe\x00", 3);
  record_valid(doc, parse_request("/blob", kBase), binary);
  const OperationEntry& blob = doc.paths["/blob"].operations.at(HttpMethod::Get);
  CHECK(blob.response_example.is_null());
  CHECK(blob.response_content_type == "application/octet-stream");
}

TEST_CASE("record_invalid needs a documented path and dedups by status and media") {
  SpecDocument doc = fresh_doc();
  ApiResponse not_found;
  not_found.status = 404;
  not_found.content_type = "application/json";
  not_found.body = R"({"error": "nope"})";

  CHECK_FALSE(record_invalid(doc, parse_request("/ghost", kBase), not_found));

  record_valid(doc, parse_request("/users/25", kBase), ok_json("{}"));
  CHECK(record_invalid(doc, parse_request("/users/99?bad=1", kBase), not_found));
  CHECK(record_invalid(doc, parse_request("/users/99?bad=2", kBase), not_found));
  const OperationEntry& op = doc.paths["/users/{id}"].operations.at(HttpMethod::Get);
  CHECK(op.invalid_behaviors.size() == 1);

  ApiResponse other_status = not_found;
  other_status.status = 400;
  CHECK(record_invalid(doc, parse_request("/users/99", kBase), other_status));
  CHECK(op.invalid_behaviors.size() == 2);

  // Same status, different media type: kept as a separate behavior.
  ApiResponse html = not_found;
  html.content_type = "text/html";
  html.body = "<html>no</html>";
  CHECK(record_invalid(doc, parse_request("/users/99", kBase), html));
  CHECK(op.invalid_behaviors.size() == 3);
}

TEST_CASE("record_invalid lands on the matching method when present") {
  SpecDocument doc = fresh_doc();
  record_valid(doc, parse_request("/pets", kBase), ok_json("{}"));
  ApiRequest post = parse_request("/pets", kBase, HttpMethod::Post);
  post.body = json::object();
  record_valid(doc, post, ok_json(R"({"id": 1})", 201));

  ApiResponse bad;
  bad.status = 400;
  bad.body = "bad";
  record_invalid(doc, parse_request("/pets", kBase, HttpMethod::Post), bad);
  CHECK(doc.paths["/pets"].operations.at(HttpMethod::Post).invalid_behaviors.size() == 1);
  CHECK(doc.paths["/pets"].operations.at(HttpMethod::Get).invalid_behaviors.empty());
}

TEST_CASE("to_openapi_json lays out the document") {
  SpecDocument doc = fresh_doc();
  doc.description = "A demo API.";
  doc.documentation_url = "http://h/docs";
  doc.api_key_name = "apikey";
  doc.default_error = {404, std::optional<std::string>("application/json"),
                       R"({"error": "Route not found"})"};

  record_valid(doc, parse_request("/users/25?age=4", kBase), ok_json(R"({"id": 25})"));
  record_valid(doc, parse_request("/users/25?age=9", kBase), ok_json(R"({"id": 25})"));
  ApiResponse bad;
  bad.status = 400;
  bad.content_type = "application/json";
  bad.body = R"({"error": "bad age"})";
  record_invalid(doc, parse_request("/users/25?age=x", kBase), bad);

  json out = to_openapi_json(doc);
  CHECK(out["openapi"] == "3.0.3");
  CHECK(out["info"]["title"] == "demo");
  CHECK(out["info"]["version"] == "1.0.0");
  CHECK(out["info"]["description"] == "A demo API.");
  CHECK(out["externalDocs"]["url"] == "http://h/docs");
  CHECK(out["servers"][0]["url"] == "http://h");
  CHECK(out["components"]["securitySchemes"]["ApiKeyQuery"]["name"] == "apikey");
  CHECK(out["security"][0]["ApiKeyQuery"].is_array());
  CHECK(out["components"]["responses"]["DefaultError"]["content"]["application/json"]["example"]
           ["error"] == "Route not found");

  const json& path = out["paths"]["/users/{id}"];
  CHECK(path["parameters"][0]["name"] == "id");
  CHECK(path["parameters"][0]["in"] == "path");
  CHECK(path["parameters"][0]["required"] == true);
  CHECK(path["parameters"][0]["schema"]["type"] == "integer");
  CHECK(path["parameters"][0]["example"] == 25);

  const json& get = path["get"];
  CHECK(get["parameters"][0]["name"] == "age");
  CHECK(get["parameters"][0]["in"] == "query");
  CHECK(get["parameters"][0]["required"] == false);
  CHECK(get["parameters"][0]["schema"]["type"] == "integer");
  CHECK(get["parameters"][0]["examples"]["example1"]["value"] == 4);
  CHECK(get["parameters"][0]["examples"]["example2"]["value"] == 9);
  CHECK(get["responses"]["200"]["content"]["application/json"]["example"]["id"] == 25);
  CHECK(get["responses"]["400"]["description"] == "Observed invalid-request behavior.");
  CHECK(get["responses"]["default"]["$ref"] == "#/components/responses/DefaultError");
}

TEST_CASE("repeated id segments get distinct parameter names") {
  SpecDocument doc = fresh_doc();
  record_valid(doc, parse_request("/users/25/posts/7", kBase), ok_json("{}"));
  json out = to_openapi_json(doc);
  REQUIRE(out["paths"].contains("/users/{id}/posts/{id2}"));
  const json& params = out["paths"]["/users/{id}/posts/{id2}"]["parameters"];
  CHECK(params[0]["name"] == "id");
  CHECK(params[1]["name"] == "id2");
}

TEST_CASE("invalid behaviors never clobber the success response") {
  SpecDocument doc = fresh_doc();
  record_valid(doc, parse_request("/r", kBase), ok_json(R"({"ok": true})"));
  ApiResponse soft;
  soft.status = 200;
  soft.content_type = "application/json";
  soft.body = R"({"error": "Endpoint not found"})";
  record_invalid(doc, parse_request("/r?x=1", kBase), soft);

  json out = to_openapi_json(doc);
  CHECK(out["paths"]["/r"]["get"]["responses"]["200"]["content"]["application/json"]["example"]
           ["ok"] == true);
}

TEST_CASE("validate_oas flags structural problems") {
  CHECK_FALSE(validate_oas(json{{"openapi", "2.0"}}).empty());

  json doc = {
      {"openapi", "3.0.3"},
      {"info", {{"title", "t"}, {"version", "1"}}},
      {"paths", {{"no-slash", json::object()}}},
  };
  auto problems = validate_oas(doc);
  REQUIRE_FALSE(problems.empty());
  bool mentions_path = false;
  for (const auto& p : problems) {
    if (p.find("no-slash") != std::string::npos) mentions_path = true;
  }
  CHECK(mentions_path);

  // Path template without a declared parameter.
  json undeclared = {
      {"openapi", "3.0.3"},
      {"info", {{"title", "t"}, {"version", "1"}}},
      {"paths",
       {{"/users/{id}",
         {{"get", {{"responses", {{"200", {{"description", "ok"}}}}}}}}}}},
  };
  CHECK_FALSE(validate_oas(undeclared).empty());

  // Responses must not be empty.
  json no_responses = {
      {"openapi", "3.0.3"},
      {"info", {{"title", "t"}, {"version", "1"}}},
      {"paths", {{"/r", {{"get", {{"responses", json::object()}}}}}}},
  };
  CHECK_FALSE(validate_oas(no_responses).empty());
}

TEST_CASE("emitted documents pass the lint and emit rejects broken ones") {
  SpecDocument doc = fresh_doc();
  record_valid(doc, parse_request("/users/25?age=4", kBase), ok_json(R"({"id": 25})"));

  std::string text = emit(doc, SpecFormat::Json);
  CHECK(text.back() == '\n');
  json parsed = json::parse(text);
  CHECK(validate_oas(parsed).empty());

  std::string yaml = emit(doc, SpecFormat::Yaml);
  // Version strings are number-like, so they stay quoted to keep their type.
  CHECK(yaml.find("openapi: \"3.0.3\"") != std::string::npos);

  SpecDocument broken = doc;
  broken.paths["no-slash"] = broken.paths["/users/{id}"];
  CHECK_THROWS_AS(emit(broken, SpecFormat::Json), SerializationError);
}

TEST_CASE("json_to_yaml renders scalars, maps, and sequences") {
  json value = {
      {"title", "Demo API"},
      {"count", 3},
      {"ratio", 0.5},
      {"flag", true},
      {"nothing", nullptr},
      {"reserved", "no"},
      {"numeric_string", "123"},
      {"empty_map", json::object()},
      {"empty_list", json::array()},
      {"list", {"a b", "x:y", 7}},
      {"nested", {{"inner", "v"}}},
      {"objects", json::array({{{"k", 1}, {"m", 2}}})},
  };
  std::string yaml = json_to_yaml(value);
  CHECK(yaml.find("title: Demo API\n") != std::string::npos);
  CHECK(yaml.find("count: 3\n") != std::string::npos);
  CHECK(yaml.find("ratio: 0.5\n") != std::string::npos);
  CHECK(yaml.find("flag: true\n") != std::string::npos);
  CHECK(yaml.find("nothing: null\n") != std::string::npos);
  CHECK(yaml.find("reserved: \"no\"\n") != std::string::npos);
  CHECK(yaml.find("numeric_string: \"123\"\n") != std::string::npos);
  CHECK(yaml.find("empty_map: {}\n") != std::string::npos);
  CHECK(yaml.find("empty_list: []\n") != std::string::npos);
  CHECK(yaml.find("- a b\n") != std::string::npos);
  CHECK(yaml.find("- \"x:y\"\n") != std::string::npos);
  CHECK(yaml.find("- 7\n") != std::string::npos);
  CHECK(yaml.find("nested:\n") != std::string::npos);
  CHECK(yaml.find("inner: v\n") != std::string::npos);
  CHECK(yaml.find("- k: 1\n") != std::string::npos);
  CHECK(yaml.find("  m: 2\n") != std::string::npos);

  json newline_string = {{"text", "line1\nline2"}};
  std::string escaped = json_to_yaml(newline_string);
  CHECK(escaped.find("text: \"line1\\nline2\"") != std::string::npos);
}

TEST_CASE("attach_descriptions fills every blank description") {
  SpecDocument doc = fresh_doc();
  record_valid(doc, parse_request("/users/25?age=4", kBase), ok_json("{}"));

  json fixture = {
      {"completions",
       {{"DESCRIPTION|api=demo|subject=the API itself", {{"text", "Demo does things."}}},
        {"DESCRIPTION|api=demo|subject=the route \"/users/{id}\"", {{"text", "One user."}}},
        {"DESCRIPTION|api=demo|subject=the GET operation on route \"/users/{id}\"",
         {{"text", "Fetch a user."}}},
        {"DESCRIPTION|api=demo|subject=the query parameter \"age\" of the route \"/users/{id}\"",
         {{"text", "Age filter."}}}}},
      {"default", {{"text", ""}}},
  };
  auto backend = std::make_shared<ScriptedBackend>(fixture);
  LlmGateway gateway(backend, 0.7);

  attach_descriptions(doc, gateway, "demo");
  CHECK(doc.description == "Demo does things.");
  CHECK(doc.paths["/users/{id}"].description == "One user.");
  const OperationEntry& op = doc.paths["/users/{id}"].operations.at(HttpMethod::Get);
  CHECK(op.description == "Fetch a user.");
  CHECK(op.parameters.at("age").description == "Age filter.");
}

TEST_CASE("attach_descriptions truncates to 300 characters") {
  SpecDocument doc = fresh_doc();
  record_valid(doc, parse_request("/r", kBase), ok_json("{}"));

  json fixture = {{"default", {{"text", std::string(400, 'd')}}}};
  auto backend = std::make_shared<ScriptedBackend>(fixture);
  LlmGateway gateway(backend, 0.7);
  attach_descriptions(doc, gateway, "demo");
  REQUIRE(doc.description.has_value());
  CHECK(doc.description->size() == 300);
}
