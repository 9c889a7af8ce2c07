#include "restinfer/testbed.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <httplib.h>

namespace restinfer::testbed {

namespace {

const char* kServerErrorBody =
    R"({"code":500,"message":"There was an error processing your request. It has been logged."})";

constexpr long long kFixtureInputTokens = 30;
constexpr long long kFixtureOutputTokens = 12;

ErrorMode parse_error_mode(const std::string& s) {
  if (s == "http404") return ErrorMode::Http404;
  if (s == "http200_error_json") return ErrorMode::Http200ErrorJson;
  if (s == "html_error") return ErrorMode::HtmlError;
  throw MockSpecError("unknown error_mode: " + s);
}

std::vector<std::string> split_segments(const std::string& path) {
  std::vector<std::string> out;
  std::string seg;
  for (char c : path) {
    if (c == '/') {
      if (!seg.empty()) out.push_back(seg);
      seg.clear();
    } else {
      seg += c;
    }
  }
  if (!seg.empty()) out.push_back(seg);
  return out;
}

bool all_digits(const std::string& s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c) != 0; });
}

bool template_matches(const std::vector<std::string>& tmpl, const std::vector<std::string>& segs) {
  if (tmpl.size() != segs.size()) return false;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == "{id}") {
      if (!all_digits(segs[i])) return false;
    } else if (tmpl[i] != segs[i]) {
      return false;
    }
  }
  return true;
}

}  // namespace

MockApiSpec parse_mock_spec(const nlohmann::json& doc) {
  if (!doc.is_object()) throw MockSpecError("mock spec must be a JSON object");
  MockApiSpec spec;
  if (!doc.contains("name") || !doc.at("name").is_string())
    throw MockSpecError("mock spec needs a string name");
  spec.name = doc.at("name").get<std::string>();
  if (doc.contains("error_mode")) {
    spec.error_mode = parse_error_mode(doc.at("error_mode").get<std::string>());
  }
  if (doc.contains("api_key_name")) {
    spec.api_key_name = doc.at("api_key_name").get<std::string>();
  }
  if (!doc.contains("routes") || !doc.at("routes").is_array() || doc.at("routes").empty())
    throw MockSpecError("mock spec needs a non-empty routes array");

  for (const auto& entry : doc.at("routes")) {
    MockRoute route;
    route.path = entry.at("path").get<std::string>();
    if (route.path.empty() || route.path[0] != '/')
      throw MockSpecError("route path must start with '/': " + route.path);
    if (entry.contains("method")) {
      auto method = parse_method(entry.at("method").get<std::string>());
      if (!method) throw MockSpecError("unknown method on route " + route.path);
      route.method = *method;
    }
    auto read_names = [&](const char* field, std::vector<std::string>& target) {
      if (!entry.contains(field)) return;
      for (const auto& name : entry.at(field)) target.push_back(name.get<std::string>());
    };
    read_names("required_params", route.required_params);
    read_names("optional_params", route.optional_params);
    read_names("http500_on", route.http500_on);
    if (entry.contains("success_status"))
      route.success_status = entry.at("success_status").get<int>();
    if (entry.contains("success_body")) route.success_body = entry.at("success_body");
    if (entry.contains("creates")) route.creates = entry.at("creates").get<bool>();
    if (entry.contains("deletes")) route.deletes = entry.at("deletes").get<bool>();
    if (entry.contains("payload_example")) route.payload_example = entry.at("payload_example");

    std::set<std::string> seen;
    for (const auto& name : route.required_params) {
      if (!seen.insert(name).second)
        throw MockSpecError("duplicate parameter " + name + " on route " + route.path);
    }
    for (const auto& name : route.optional_params) {
      if (!seen.insert(name).second)
        throw MockSpecError("duplicate parameter " + name + " on route " + route.path);
    }
    spec.routes.push_back(std::move(route));
  }
  return spec;
}

MockApiSpec load_mock_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MockSpecError("cannot open mock spec: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw MockSpecError("mock spec is not valid JSON: " + std::string(e.what()));
  }
  return parse_mock_spec(doc);
}

MockServer::MockServer(MockApiSpec spec, int port)
    : spec_(std::move(spec)), server_(std::make_unique<httplib::Server>()) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      log_.push_back(req.method + " " + req.target);
    }

    auto respond_json = [&res](int status, const nlohmann::json& body) {
      res.status = status;
      res.set_content(body.dump(), "application/json");
    };

    auto respond_error_mode = [&]() {
      switch (spec_.error_mode) {
        case ErrorMode::Http404:
          respond_json(404, {{"error", "Route not found"}});
          break;
        case ErrorMode::Http200ErrorJson:
          respond_json(200, {{"error", "Endpoint not found"}});
          break;
        case ErrorMode::HtmlError:
          res.status = 200;
          res.set_content(
              "<!DOCTYPE html><html><head><title>Not Found</title></head>"
              "<body><p>The page could not be found.</p></body></html>",
              "text/html");
          break;
      }
    };

    auto method = parse_method(req.method);
    if (!method) {
      respond_json(405, {{"error", "Method not allowed"}});
      return;
    }

    std::vector<std::string> segments = split_segments(req.path);
    const MockRoute* match = nullptr;
    bool path_seen = false;
    for (const auto& route : spec_.routes) {
      if (!template_matches(split_segments(route.path), segments)) continue;
      path_seen = true;
      if (route.method == *method) {
        match = &route;
        break;
      }
    }
    if (!match) {
      if (path_seen) {
        respond_json(405, {{"error", "Method not allowed"}});
      } else {
        respond_error_mode();
      }
      return;
    }

    if (spec_.api_key_name && !req.has_param(*spec_.api_key_name)) {
      respond_json(401, {{"error", "Missing API key"}});
      return;
    }

    std::set<std::string> allowed(match->required_params.begin(), match->required_params.end());
    allowed.insert(match->optional_params.begin(), match->optional_params.end());
    for (const auto& [name, value] : req.params) {
      (void)value;
      if (spec_.api_key_name && name == *spec_.api_key_name) continue;
      if (allowed.count(name) == 0) {
        respond_json(400, {{"error", "Unknown parameter: " + name}});
        return;
      }
    }
    for (const auto& name : match->required_params) {
      if (!req.has_param(name)) {
        respond_json(400, {{"error", "Missing required parameter: " + name}});
        return;
      }
    }

    if (!match->http500_on.empty()) {
      bool all_present = std::all_of(match->http500_on.begin(), match->http500_on.end(),
                                     [&](const std::string& name) { return req.has_param(name); });
      if (all_present) {
        res.status = 500;
        res.set_content(kServerErrorBody, "application/json");
        return;
      }
    }

    if (match->creates) {
      long long id;
      {
        std::lock_guard<std::mutex> lock(mutex_);
        id = next_id_++;
        created_.insert(id);
      }
      nlohmann::json body = match->success_body.is_object() ? match->success_body
                                                            : nlohmann::json::object();
      body["id"] = id;
      res.status = match->success_status;
      res.set_content(body.dump(), "application/json");
      res.set_header("Location", req.path + "/" + std::to_string(id));
      return;
    }

    if (match->deletes) {
      long long id = -1;
      auto tmpl = split_segments(match->path);
      for (std::size_t i = 0; i < tmpl.size(); ++i) {
        if (tmpl[i] != "{id}") continue;
        try {
          id = std::stoll(segments[i]);
        } catch (const std::exception&) {
          id = -1;  // out-of-range digit strings never match a created id
        }
      }
      std::lock_guard<std::mutex> lock(mutex_);
      if (created_.erase(id) == 0) {
        respond_json(404, {{"error", "No such resource"}});
        return;
      }
      respond_json(match->success_status, {{"deleted", id}});
      return;
    }

    respond_json(match->success_status, match->success_body);
  };

  server_->set_tcp_nodelay(true);
  server_->Get(".*", handler);
  server_->Post(".*", handler);
  server_->Put(".*", handler);
  server_->Patch(".*", handler);
  server_->Delete(".*", handler);

  if (port == 0) {
    port_ = server_->bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw PortBindError("cannot bind mock server to an ephemeral port");
  } else {
    if (!server_->bind_to_port("127.0.0.1", port))
      throw PortBindError("cannot bind mock server to port " + std::to_string(port));
    port_ = port;
  }

  thread_ = std::thread([this]() { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

MockServer::~MockServer() { stop(); }

void MockServer::stop() {
  if (server_ && server_->is_running()) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::vector<std::string> MockServer::request_log() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return log_;
}

namespace {

void add_completion(nlohmann::json& fixture, const std::string& digest, const std::string& text) {
  fixture["completions"][digest] = {{"text", text},
                                    {"input_tokens", kFixtureInputTokens},
                                    {"output_tokens", kFixtureOutputTokens}};
}

std::string json_list(const std::vector<std::string>& items) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& item : items) arr.push_back(item);
  return arr.dump();
}

void push_unique(std::vector<std::string>& items, const std::string& value) {
  if (std::find(items.begin(), items.end(), value) == items.end()) items.push_back(value);
}

}  // namespace

nlohmann::json build_full_knowledge_fixture(const MockApiSpec& spec,
                                            const std::optional<std::string>& base_url,
                                            const std::set<std::string>& dropped_route_names) {
  nlohmann::json fixture;
  fixture["completions"] = nlohmann::json::object();
  fixture["default"] = {{"text", ""}, {"input_tokens", 0}, {"output_tokens", 0}};

  auto dropped = [&](const std::string& name) { return dropped_route_names.count(name) > 0; };

  // Base data. URLs are only offered when the server address is known.
  {
    nlohmann::json base = {{"description", spec.name + " mock API for local testing."}};
    if (base_url) {
      base["documentation_url"] = *base_url + "/docs";
      base["server_url"] = *base_url;
    }
    add_completion(fixture, "BASE_DATA|api=" + spec.name, base.dump());
  }

  // Route list: first segments, POST routes announced with their method.
  std::vector<std::string> route_items;
  std::vector<std::string> route_vocab;
  std::vector<std::string> pair_vocab;
  std::vector<std::string> name_vocab;
  std::map<std::string, std::vector<std::string>> params_by_base_route;

  for (const auto& route : spec.routes) {
    auto segments = split_segments(route.path);
    if (segments.empty()) continue;
    const std::string& first = segments[0];
    bool is_dropped = dropped(first);

    if (!is_dropped) {
      if (route.method == HttpMethod::Get && segments.size() == 1) {
        push_unique(route_items, "/" + first);
        for (const auto& name : route.required_params) {
          push_unique(params_by_base_route["/" + first], name);
        }
        for (const auto& name : route.optional_params) {
          push_unique(params_by_base_route["/" + first], name);
        }
      }
      if (route.method == HttpMethod::Post && segments.size() == 1) {
        push_unique(route_items, "POST /" + first);
      }
      for (const auto& seg : segments) {
        if (seg != "{id}" && !dropped(seg)) push_unique(route_vocab, seg);
      }
    }

    for (const auto& name : route.required_params) {
      push_unique(pair_vocab, name + "=1");
      push_unique(name_vocab, name);
    }
    for (const auto& name : route.optional_params) {
      push_unique(pair_vocab, name + "=1");
      push_unique(name_vocab, name);
    }

    if (route.method == HttpMethod::Post || route.method == HttpMethod::Put ||
        route.method == HttpMethod::Patch) {
      add_completion(fixture,
                     "PAYLOAD_EXAMPLE|api=" + spec.name + "|route=/" + first +
                         "|method=" + to_string(route.method),
                     route.payload_example.dump());
    }
  }

  add_completion(fixture, "ROUTE_LIST|api=" + spec.name, json_list(route_items));
  for (const auto& [route, params] : params_by_base_route) {
    add_completion(fixture, "PARAM_LIST|api=" + spec.name + "|route=" + route, json_list(params));
  }
  add_completion(fixture, "MASK_FILL|api=" + spec.name + "|token=<route>",
                 json_list(route_vocab));
  add_completion(fixture, "MASK_FILL|api=" + spec.name + "|token=<parameter=value>",
                 json_list(pair_vocab));
  add_completion(fixture, "MASK_FILL|api=" + spec.name + "|token=<parameter>",
                 json_list(name_vocab));
  add_completion(fixture, "MASK_FILL|api=" + spec.name + "|token=<value>",
                 json_list({"1"}));
  return fixture;
}

namespace {

std::set<std::string> truth_routes(const MockApiSpec& spec) {
  std::set<std::string> routes;
  for (const auto& route : spec.routes) routes.insert(route.path);
  return routes;
}

std::set<std::string> truth_params(const MockApiSpec& spec) {
  std::set<std::string> params;
  for (const auto& route : spec.routes) {
    params.insert(route.required_params.begin(), route.required_params.end());
    params.insert(route.optional_params.begin(), route.optional_params.end());
  }
  return params;
}

}  // namespace

RecallResult compute_recall(const MockApiSpec& ground_truth, const SpecDocument& doc) {
  std::set<std::string> routes = truth_routes(ground_truth);
  std::set<std::string> params = truth_params(ground_truth);

  RecallResult result;
  result.truth_routes = routes.size();
  result.truth_params = params.size();

  for (const auto& [path, entry] : doc.paths) {
    if (routes.count(path)) ++result.found_routes;
    for (const auto& [method, op] : entry.operations) {
      (void)method;
      for (const auto& [name, param] : op.parameters) {
        (void)param;
        if (params.count(name)) {
          params.erase(name);
          ++result.found_params;
        }
      }
    }
  }

  result.route_recall =
      routes.empty() ? 0.0
                     : static_cast<double>(result.found_routes) /
                           static_cast<double>(result.truth_routes);
  result.param_recall =
      result.truth_params == 0
          ? 0.0
          : static_cast<double>(result.found_params) / static_cast<double>(result.truth_params);
  return result;
}

nlohmann::json ground_truth_json(const MockApiSpec& spec) {
  nlohmann::json routes = nlohmann::json::array();
  for (const auto& route : truth_routes(spec)) routes.push_back(route);
  nlohmann::json params = nlohmann::json::array();
  for (const auto& name : truth_params(spec)) params.push_back(name);
  return {{"routes", routes}, {"params", params}};
}

}  // namespace restinfer::testbed
