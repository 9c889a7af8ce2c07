#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "restinfer/orchestrator.hpp"
#include "restinfer/testbed.hpp"

using namespace restinfer;
using nlohmann::json;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  std::filesystem::path dir = std::filesystem::path(RESTINFER_WORK_DIR) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << doc.dump(2) << "\n";
  return path.string();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::vector<json> lines;
  std::string raw;
  while (std::getline(in, raw)) {
    if (!raw.empty()) lines.push_back(json::parse(raw));
  }
  return lines;
}

RunConfig scripted_config(const std::string& name) {
  RunConfig cfg;
  cfg.api_name = name;
  cfg.server_url = "http://mock";
  cfg.rate_limit_ms = 0;
  cfg.llm_backend = "scripted";
  return cfg;
}

ApiResponse json_response(int status, json body) {
  ApiResponse resp;
  resp.status = status;
  resp.content_type = "application/json";
  resp.body = body.dump();
  return resp;
}

// Deterministic transport double: answers from a table, records every send.
struct MapResponder {
  std::map<std::string, ApiResponse> table;  // key: "METHOD /relative?query"
  std::vector<std::string> sent;
  std::vector<std::chrono::steady_clock::time_point> stamps;

  std::string key_of(const ApiRequest& req) const {
    std::string rel = render_relative(req);
    if (rel.empty()) rel = "/";
    return to_string(req.method) + " " + rel;
  }

  SendFn as_send_fn() {
    return [this](const ApiRequest& req) {
      stamps.push_back(std::chrono::steady_clock::now());
      std::string key = key_of(req);
      sent.push_back(key);
      if (key == "FAIL") throw NetworkError("synthetic");
      auto it = table.find(key);
      if (it != table.end()) {
        if (it->second.status < 0) throw NetworkError("synthetic transport failure");
        return it->second;
      }
      return json_response(404, {{"error", "Route not found"}});
    };
  }

  long long count(const std::string& key) const {
    long long n = 0;
    for (const auto& s : sent) {
      if (s == key) ++n;
    }
    return n;
  }
};

json empty_fixture() {
  return {{"completions", json::object()},
          {"default", {{"text", ""}, {"input_tokens", 0}, {"output_tokens", 0}}}};
}

json fixture_with(std::map<std::string, std::string> texts) {
  json fixture = empty_fixture();
  for (const auto& [digest, text] : texts) {
    fixture["completions"][digest] = {{"text", text}, {"input_tokens", 3}, {"output_tokens", 2}};
  }
  return fixture;
}

testbed::MockApiSpec live_spec() {
  testbed::MockApiSpec spec;
  spec.name = "live";

  testbed::MockRoute players;
  players.path = "/players";
  players.optional_params = {"team"};
  players.success_body = json{{"players", json::array({"ann", "bo"})}};
  spec.routes.push_back(players);

  testbed::MockRoute player;
  player.path = "/players/{id}";
  player.optional_params = {"season"};
  player.success_body = json{{"name", "ann"}};
  spec.routes.push_back(player);

  testbed::MockRoute words;
  words.path = "/words";
  words.required_params = {"sp"};
  words.optional_params = {"v"};
  words.http500_on = {"sp", "v"};
  words.success_body = json{{"words", json::array({"w"})}};
  spec.routes.push_back(words);

  testbed::MockRoute create;
  create.path = "/players";
  create.method = HttpMethod::Post;
  create.creates = true;
  create.success_status = 201;
  create.payload_example = json{{"name", "Rex"}};
  spec.routes.push_back(create);

  testbed::MockRoute remove;
  remove.path = "/players/{id}";
  remove.method = HttpMethod::Delete;
  remove.deletes = true;
  spec.routes.push_back(remove);

  return spec;
}

}  // namespace

TEST_CASE("pipeline explores a live mock end to end") {
  auto dir = fresh_dir("orch_live");
  testbed::MockApiSpec spec = live_spec();
  testbed::MockServer server(spec);
  std::string base = server.base_url();

  json fixture = testbed::build_full_knowledge_fixture(spec, base);
  RunConfig cfg = scripted_config("live");
  cfg.server_url = base;

  RunOptions options;
  options.out_dir = dir / "out";
  options.fixture_path = write_json(dir / "fixture.json", fixture);
  options.rng_seed = 42;

  RunResult result = run(cfg, options);

  CHECK(result.doc.paths.count("/players") == 1);
  CHECK(result.doc.paths.count("/players/{id}") == 1);
  CHECK(result.doc.paths.count("/words") == 1);
  CHECK(result.doc.documentation_url == base + "/docs");

  // POST was announced, sent, and paired with an immediate DELETE on the
  // created resource.
  CHECK(result.doc.paths["/players"].operations.count(HttpMethod::Post) == 1);
  CHECK(result.doc.paths["/players/{id}"].operations.count(HttpMethod::Delete) == 1);
  auto mock_log = server.request_log();
  std::size_t post_at = mock_log.size(), delete_at = mock_log.size();
  for (std::size_t i = 0; i < mock_log.size(); ++i) {
    if (mock_log[i] == "POST /players" && post_at == mock_log.size()) post_at = i;
    if (mock_log[i] == "DELETE /players/1" && delete_at == mock_log.size()) delete_at = i;
  }
  REQUIRE(post_at < mock_log.size());
  REQUIRE(delete_at < mock_log.size());
  CHECK(post_at < delete_at);

  // The words route's two-parameter predicate fired at least once.
  json server_errors = json::parse(read_file(result.server_errors_path));
  CHECK(server_errors["api_name"] == "live");
  REQUIRE(server_errors["errors"].is_array());
  CHECK(server_errors["errors"].size() >= 1);
  bool words_error = false;
  for (const auto& entry : server_errors["errors"]) {
    if (entry["url"].get<std::string>().find("/words") != std::string::npos &&
        entry["status"] == 500) {
      words_error = true;
      CHECK(entry["body"].get<std::string>().find("It has been logged") != std::string::npos);
    }
  }
  CHECK(words_error);

  // Log, histogram, and report agree.
  auto log_lines = read_jsonl(result.log_path);
  CHECK(static_cast<long long>(log_lines.size()) == result.report.requests_sent);
  long long histogram_total = 0;
  for (const auto& [cls, count] : result.report.verdict_histogram) {
    (void)cls;
    histogram_total += count;
  }
  CHECK(histogram_total == result.report.requests_sent);
  CHECK(result.report.verdict_histogram["ServerError"] >= 1);
  CHECK(result.report.routes_found == static_cast<long long>(result.doc.paths.size()));
  CHECK(result.report.token_usage.input_tokens > 0);

  for (const auto& line : log_lines) {
    CHECK(line.contains("timestamp"));
    CHECK(line.contains("method"));
    CHECK(line.contains("url"));
    CHECK(line.contains("status"));
    CHECK(line.contains("body_digest"));
    CHECK(line.contains("verdict"));
    CHECK(line.contains("elapsed_ms"));
    CHECK(line["api"] == "live");
  }

  // Emitted documents exist and pass the lint.
  json spec_json = json::parse(read_file(result.spec_json_path));
  CHECK(validate_oas(spec_json).empty());
  CHECK(spec_json["servers"][0]["url"] == base);
  CHECK_FALSE(read_file(result.spec_yaml_path).empty());

  json report_json = json::parse(read_file(result.report_path));
  CHECK(report_json["api_name"] == "live");
  CHECK(report_json["iterations"] == result.iterations);

  // Full knowledge reaches the whole route set.
  testbed::RecallResult recall = testbed::compute_recall(spec, result.doc);
  CHECK(recall.route_recall == doctest::Approx(1.0));
  CHECK(result.iterations <= 5);
}

TEST_CASE("http sender round-trips methods, queries, and headers") {
  testbed::MockApiSpec spec = live_spec();
  testbed::MockServer server(spec);
  HttpSender sender(server.base_url());

  ApiResponse ok = sender.send(parse_request("/players?team=1", server.base_url()));
  CHECK(ok.status == 200);
  REQUIRE(ok.content_type.has_value());
  CHECK(ok.content_type->find("application/json") != std::string::npos);
  CHECK(json::parse(ok.body)["players"].is_array());

  ApiRequest post = parse_request("/players", server.base_url(), HttpMethod::Post);
  post.body = json{{"name", "Rex"}};
  ApiResponse created = sender.send(post);
  CHECK(created.status == 201);
  REQUIRE(created.location.has_value());
  CHECK(created.location->find("/players/") == 0);

  ApiResponse missing = sender.send(parse_request("/nothing", server.base_url()));
  CHECK(missing.status == 404);

  HttpSender dead("http://127.0.0.1:1", 1);
  CHECK_THROWS_AS(dead.send(parse_request("/x", "http://127.0.0.1:1")), NetworkError);
}

TEST_CASE("requests are paced by the configured rate limit") {
  auto dir = fresh_dir("orch_pace");
  MapResponder responder;
  responder.table["GET /a"] = json_response(200, {{"ok", true}});

  RunConfig cfg = scripted_config("pace");
  cfg.rate_limit_ms = 100;

  RunOptions options;
  options.out_dir = dir / "out";
  options.fixture_path =
      write_json(dir / "fixture.json", fixture_with({{"ROUTE_LIST|api=pace", "[\"/a\"]"}}));
  options.send_override = responder.as_send_fn();
  options.max_iterations_override = 1;

  run(cfg, options);

  REQUIRE(responder.stamps.size() >= 4);
  for (std::size_t i = 1; i < responder.stamps.size(); ++i) {
    auto gap = std::chrono::duration_cast<std::chrono::milliseconds>(responder.stamps[i] -
                                                                     responder.stamps[i - 1]);
    CHECK(gap.count() >= 95);
  }
}

TEST_CASE("configured api key rides on every outgoing request") {
  auto dir = fresh_dir("orch_key");
  testbed::MockApiSpec spec = live_spec();
  spec.api_key_name = "apikey";
  testbed::MockServer server(std::move(spec));
  std::string base = server.base_url();

  json fixture = testbed::build_full_knowledge_fixture(live_spec(), base);
  RunConfig cfg = scripted_config("live");
  cfg.server_url = base;
  cfg.api_key_param = std::pair<std::string, std::string>{"apikey", "K123"};

  RunOptions options;
  options.out_dir = dir / "out";
  options.fixture_path = write_json(dir / "fixture.json", fixture);

  RunResult result = run(cfg, options);

  // Base-data liveness probes are bare GETs; every real request carries the key.
  auto mock_log = server.request_log();
  REQUIRE_FALSE(mock_log.empty());
  long long keyed = 0;
  for (const auto& target : mock_log) {
    if (target == "GET /" || target == "GET /docs") continue;
    CHECK(target.find("apikey=K123") != std::string::npos);
    ++keyed;
  }
  CHECK(keyed >= 10);

  // The key never leaks into the canonical identity: routes documented without it.
  CHECK(result.doc.paths.count("/players") == 1);
  const auto& params = result.doc.paths["/players"].operations.at(HttpMethod::Get).parameters;
  CHECK(params.count("apikey") == 0);

  for (const auto& line : read_jsonl(result.log_path)) {
    CHECK(line["url"].get<std::string>().find("apikey=K123") != std::string::npos);
  }

  json spec_json = json::parse(read_file(result.spec_json_path));
  CHECK(spec_json["components"]["securitySchemes"]["ApiKeyQuery"]["name"] == "apikey");
}

TEST_CASE("transport failures are logged as NetworkFail and the run continues") {
  auto dir = fresh_dir("orch_netfail");
  MapResponder responder;
  responder.table["GET /a"] = json_response(200, {{"ok", true}});
  responder.table["GET /b"].status = -1;  // sentinel: throw NetworkError

  RunConfig cfg = scripted_config("net");
  RunOptions options;
  options.out_dir = dir / "out";
  options.fixture_path = write_json(dir / "fixture.json",
                                    fixture_with({{"ROUTE_LIST|api=net", "[\"/a\", \"/b\"]"}}));
  options.send_override = responder.as_send_fn();
  options.max_iterations_override = 1;

  RunResult result = run(cfg, options);
  CHECK(result.report.verdict_histogram["NetworkFail"] == 1);

  bool logged = false;
  for (const auto& line : read_jsonl(result.log_path)) {
    if (line["verdict"] == "NetworkFail") {
      logged = true;
      CHECK(line["status"] == 0);
      CHECK(line["url"].get<std::string>().find("/b") != std::string::npos);
    }
  }
  CHECK(logged);
  CHECK(result.doc.paths.count("/a") == 1);
  CHECK(result.doc.paths.count("/b") == 0);
}

TEST_CASE("invalid requests are never sent twice") {
  auto dir = fresh_dir("orch_once");
  MapResponder responder;
  responder.table["GET /a"] = json_response(200, {{"ok", true}});

  RunConfig cfg = scripted_config("once");
  RunOptions options;
  options.out_dir = dir / "out";
  options.fixture_path =
      write_json(dir / "fixture.json", fixture_with({{"ROUTE_LIST|api=once", "[\"/a\"]"}}));
  options.send_override = responder.as_send_fn();

  RunResult result = run(cfg, options);

  // Quiet-iteration rule: one productive iteration, then two without news.
  CHECK(result.iterations == 3);
  for (const auto& key : responder.sent) {
    CHECK(responder.count(key) == 1);
  }
}

TEST_CASE("max_iterations caps the loop") {
  auto dir = fresh_dir("orch_cap");
  MapResponder responder;
  responder.table["GET /a"] = json_response(200, {{"ok", true}});

  RunConfig cfg = scripted_config("cap");
  RunOptions options;
  options.out_dir = dir / "out";
  options.fixture_path =
      write_json(dir / "fixture.json", fixture_with({{"ROUTE_LIST|api=cap", "[\"/a\"]"}}));
  options.send_override = responder.as_send_fn();
  options.max_iterations_override = 1;

  CHECK(run(cfg, options).iterations == 1);

  cfg.max_iterations = 2;
  RunOptions no_override = options;
  no_override.out_dir = dir / "out2";
  no_override.max_iterations_override.reset();
  MapResponder responder2;
  responder2.table["GET /a"] = json_response(200, {{"ok", true}});
  no_override.send_override = responder2.as_send_fn();
  CHECK(run(cfg, no_override).iterations == 2);
}

TEST_CASE("evaluation mode stops at full recall") {
  auto dir = fresh_dir("orch_eval");
  MapResponder responder;
  responder.table["GET /a"] = json_response(200, {{"ok", true}});

  RunConfig cfg = scripted_config("eval");
  RunOptions options;
  options.out_dir = dir / "out";
  options.fixture_path =
      write_json(dir / "fixture.json", fixture_with({{"ROUTE_LIST|api=eval", "[\"/a\"]"}}));
  options.ground_truth_path =
      write_json(dir / "truth.json", {{"routes", {"/a"}}, {"params", json::array()}});
  options.send_override = responder.as_send_fn();

  RunResult result = run(cfg, options);
  CHECK(result.iterations == 1);
  // Only the default-error probe and the announced route were needed.
  CHECK(result.report.requests_sent == 2);
}

TEST_CASE("identical seeds produce byte-identical documents") {
  auto dir = fresh_dir("orch_determinism");
  json fixture = fixture_with({
      {"ROUTE_LIST|api=det", "[\"/a\", \"/b\"]"},
      {"PARAM_LIST|api=det|route=/a", "[\"x\", \"y\"]"},
      {"MASK_FILL|api=det|token=<route>", "[\"a\", \"b\", \"c\"]"},
      {"MASK_FILL|api=det|token=<parameter=value>", "[\"x=1\", \"y=2\"]"},
  });

  auto run_once = [&](const std::string& sub) {
    MapResponder responder;
    responder.table["GET /a"] = json_response(200, {{"ok", 1}});
    responder.table["GET /a?x=1"] = json_response(200, {{"ok", 2}});
    responder.table["GET /b"] = json_response(200, {{"items", json::array({1, 2})}});
    responder.table["GET /a/c"] = json_response(200, {{"deep", true}});

    RunConfig cfg = scripted_config("det");
    RunOptions options;
    options.out_dir = dir / sub;
    options.fixture_path = write_json(dir / (sub + "_fixture.json"), fixture);
    options.rng_seed = 42;
    options.send_override = responder.as_send_fn();
    return run(cfg, options);
  };

  RunResult first = run_once("one");
  RunResult second = run_once("two");

  CHECK(read_file(first.spec_json_path) == read_file(second.spec_json_path));
  CHECK(read_file(first.spec_yaml_path) == read_file(second.spec_yaml_path));
  CHECK(first.report.requests_sent == second.report.requests_sent);
  CHECK(first.report.verdict_histogram == second.report.verdict_histogram);
  CHECK(first.iterations == second.iterations);
}

TEST_CASE("manual seeds bootstrap exploration when the model offers nothing") {
  auto dir = fresh_dir("orch_seeds");
  MapResponder responder;
  responder.table["GET /hidden?k=2"] = json_response(200, {{"ok", true}});

  RunConfig cfg = scripted_config("seeded");
  cfg.manual_seeds = {"/hidden?k=2", "not a url"};

  RunOptions options;
  options.out_dir = dir / "out";
  options.fixture_path = write_json(dir / "fixture.json", empty_fixture());
  options.send_override = responder.as_send_fn();
  options.max_iterations_override = 2;

  RunResult result = run(cfg, options);
  REQUIRE(result.doc.paths.count("/hidden") == 1);
  const auto& op = result.doc.paths["/hidden"].operations.at(HttpMethod::Get);
  CHECK(op.parameters.count("k") == 1);
}

TEST_CASE("a run with no seeds at all fails fast") {
  auto dir = fresh_dir("orch_noseeds");
  MapResponder responder;  // everything 404

  RunConfig cfg = scripted_config("none");
  RunOptions options;
  options.out_dir = dir / "out";
  options.fixture_path = write_json(dir / "fixture.json", empty_fixture());
  options.send_override = responder.as_send_fn();

  CHECK_THROWS_AS(run(cfg, options), NoValidSeeds);
}

TEST_CASE("a run without any server url fails fast") {
  auto dir = fresh_dir("orch_nourl");
  RunConfig cfg = scripted_config("lost");
  cfg.server_url.reset();

  RunOptions options;
  options.out_dir = dir / "out";
  options.fixture_path = write_json(dir / "fixture.json", empty_fixture());
  options.send_override = [](const ApiRequest&) { return ApiResponse{}; };

  CHECK_THROWS_AS(run(cfg, options), MissingServerUrl);
}

TEST_CASE("ground truth files load in both formats") {
  auto dir = fresh_dir("orch_truth");

  auto direct = write_json(dir / "direct.json",
                           {{"routes", {"/a", "/b/{id}"}}, {"params", {"x", "y"}}});
  GroundTruth a = load_ground_truth(direct);
  CHECK(a.routes == std::set<std::string>{"/a", "/b/{id}"});
  CHECK(a.params == std::set<std::string>{"x", "y"});

  json mock_doc;
  mock_doc["name"] = "m";
  mock_doc["routes"] = json::array();
  mock_doc["routes"].push_back({{"path", "/a"}, {"required_params", {"x"}}});
  mock_doc["routes"].push_back({{"path", "/b"}, {"optional_params", {"y"}}});
  GroundTruth b = load_ground_truth(write_json(dir / "mock.json", mock_doc));
  CHECK(b.routes == std::set<std::string>{"/a", "/b"});
  CHECK(b.params == std::set<std::string>{"x", "y"});

  CHECK_THROWS(load_ground_truth((dir / "missing.json").string()));
}
