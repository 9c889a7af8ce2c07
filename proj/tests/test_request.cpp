#include <doctest.h>

#include <algorithm>
#include <random>

#include "restinfer/request.hpp"

using namespace restinfer;

TEST_CASE("parse_request splits path and query") {
  ApiRequest req = parse_request("/users/25?id=Leo&age=4", "https://api.example.com");
  CHECK(req.method == HttpMethod::Get);
  CHECK(req.base_url == "https://api.example.com");
  CHECK(req.path_segments == std::vector<std::string>{"users", "25"});
  REQUIRE(req.query_params.size() == 2);
  CHECK(req.query_params[0] == QueryParam{"id", "Leo"});
  CHECK(req.query_params[1] == QueryParam{"age", "4"});
}

TEST_CASE("parse_request accepts absolute URLs matching the base") {
  ApiRequest req = parse_request("https://api.example.com/users?x=1", "https://api.example.com");
  CHECK(req.path_segments == std::vector<std::string>{"users"});
  CHECK(req.query_params == std::vector<QueryParam>{{"x", "1"}});
}

TEST_CASE("parse_request handles query-only and root requests") {
  ApiRequest query_only = parse_request("?a=1", "http://h");
  CHECK(query_only.path_segments.empty());
  CHECK(query_only.query_params == std::vector<QueryParam>{{"a", "1"}});

  ApiRequest root = parse_request("/", "http://h");
  CHECK(root.path_segments.empty());
  CHECK(root.query_params.empty());
  CHECK(render_relative(root).empty());
}

TEST_CASE("parse_request drops empty segments and empty pairs") {
  ApiRequest req = parse_request("/a//b/?x=1&&y=2", "http://h");
  CHECK(req.path_segments == std::vector<std::string>{"a", "b"});
  REQUIRE(req.query_params.size() == 2);
}

TEST_CASE("parse_request rejects malformed input") {
  CHECK_THROWS_AS(parse_request("users", "http://h"), MalformedRequest);
  CHECK_THROWS_AS(parse_request("http://other.example/users", "http://h"), MalformedRequest);
  CHECK_THROWS_AS(parse_request("/users?noequals", "http://h"), MalformedRequest);
  CHECK_THROWS_AS(parse_request("", "http://h"), MalformedRequest);
}

TEST_CASE("parse_request preserves percent-encoding verbatim") {
  ApiRequest req = parse_request("/search?q=a%20b", "http://h");
  CHECK(req.query_params[0].value == "a%20b");
  CHECK(render(req) == "http://h/search?q=a%20b");
}

TEST_CASE("render joins base, path, and query") {
  ApiRequest req = parse_request("/users/25?id=Leo&age=4", "https://api.example.com");
  CHECK(render_relative(req) == "/users/25?id=Leo&age=4");
  CHECK(render(req) == "https://api.example.com/users/25?id=Leo&age=4");

  ApiRequest no_query = parse_request("/users", "http://h");
  CHECK(render_relative(no_query) == "/users");

  ApiRequest query_only = parse_request("?a=1&b=", "http://h");
  CHECK(render_relative(query_only) == "?a=1&b=");
}

TEST_CASE("canonical_key ignores query order but not method or values") {
  ApiRequest a = parse_request("/u?x=1&y=2", "http://h");
  ApiRequest b = parse_request("/u?y=2&x=1", "http://h");
  CHECK(canonical_key(a) == canonical_key(b));

  ApiRequest c = parse_request("/u?x=1&y=3", "http://h");
  CHECK(canonical_key(a) != canonical_key(c));

  ApiRequest d = parse_request("/u?x=1&y=2", "http://h", HttpMethod::Delete);
  CHECK(canonical_key(a) != canonical_key(d));
}

TEST_CASE("canonical_key lowercases scheme and host only") {
  ApiRequest a = parse_request("/Users", "HTTP://API.Example.com");
  ApiRequest b = parse_request("/Users", "http://api.example.com");
  ApiRequest c = parse_request("/users", "http://api.example.com");
  CHECK(canonical_key(a) == canonical_key(b));
  CHECK(canonical_key(a) != canonical_key(c));
}

TEST_CASE("canonical_key is invariant under any pair permutation") {
  ApiRequest req = parse_request("/r?a=1&b=2&c=3&d=4", "http://h");
  std::string key = canonical_key(req);
  std::mt19937 gen(7);
  for (int i = 0; i < 50; ++i) {
    ApiRequest shuffled = req;
    std::shuffle(shuffled.query_params.begin(), shuffled.query_params.end(), gen);
    CHECK(canonical_key(shuffled) == key);
  }
}

TEST_CASE("generalize_id_segments replaces all-digit segments") {
  CHECK(generalize_id_segments({"users", "25"}) == std::vector<std::string>{"users", "{id}"});
  CHECK(generalize_id_segments({"users", "25", "stats"}) ==
        std::vector<std::string>{"users", "{id}", "stats"});
  CHECK(generalize_id_segments({"v2", "25a", "x9"}) == std::vector<std::string>{"v2", "25a", "x9"});
  CHECK(generalize_id_segments({}) == std::vector<std::string>{});
}

TEST_CASE("generalized_path always starts with a slash") {
  CHECK(generalized_path(parse_request("/users/25", "http://h")) == "/users/{id}");
  CHECK(generalized_path(parse_request("?x=1", "http://h")) == "/");
}

TEST_CASE("method names round-trip") {
  for (HttpMethod m : {HttpMethod::Get, HttpMethod::Post, HttpMethod::Put, HttpMethod::Patch,
                       HttpMethod::Delete}) {
    auto parsed = parse_method(to_string(m));
    REQUIRE(parsed.has_value());
    CHECK(*parsed == m);
  }
  CHECK(parse_method("get").has_value());
  CHECK_FALSE(parse_method("FETCH").has_value());
}

TEST_CASE("mask_token_text literals") {
  CHECK(mask_token_text(MaskTokenKind::Route) == "<route>");
  CHECK(mask_token_text(MaskTokenKind::ParamPair) == "<parameter=value>");
  CHECK(mask_token_text(MaskTokenKind::ParamName) == "<parameter>");
  CHECK(mask_token_text(MaskTokenKind::ParamValue) == "<value>");
}

TEST_CASE("infer_value_type classifies raw values") {
  CHECK(infer_value_type("25") == TypeTag::Integer);
  CHECK(infer_value_type("-3") == TypeTag::Integer);
  CHECK(infer_value_type("3.14") == TypeTag::Number);
  CHECK(infer_value_type("true") == TypeTag::Boolean);
  CHECK(infer_value_type("FALSE") == TypeTag::Boolean);
  CHECK(infer_value_type("a,b") == TypeTag::Array);
  CHECK(infer_value_type("a, b, c") == TypeTag::Array);
  CHECK(infer_value_type("Leo") == TypeTag::String);
  CHECK(infer_value_type("a,") == TypeTag::String);
  CHECK(infer_value_type("") == TypeTag::String);
  CHECK(infer_value_type("1.2.3") == TypeTag::String);
}

TEST_CASE("widen_type keeps equal tags and degrades mixed ones") {
  CHECK(widen_type(TypeTag::Integer, TypeTag::Integer) == TypeTag::Integer);
  CHECK(widen_type(TypeTag::Integer, TypeTag::Number) == TypeTag::Number);
  CHECK(widen_type(TypeTag::Number, TypeTag::Integer) == TypeTag::Number);
  CHECK(widen_type(TypeTag::Integer, TypeTag::String) == TypeTag::String);
  CHECK(widen_type(TypeTag::Boolean, TypeTag::Integer) == TypeTag::String);
  CHECK(widen_type(TypeTag::Array, TypeTag::Array) == TypeTag::Array);
}

TEST_CASE("typed_example produces JSON under the tag") {
  CHECK(typed_example("25", TypeTag::Integer) == nlohmann::json(25));
  CHECK(typed_example("3.5", TypeTag::Number) == nlohmann::json(3.5));
  CHECK(typed_example("true", TypeTag::Boolean) == nlohmann::json(true));
  CHECK(typed_example("a,b", TypeTag::Array) == nlohmann::json({"a", "b"}));
  CHECK(typed_example("Leo", TypeTag::String) == nlohmann::json("Leo"));
}
