#include "restinfer/orchestrator.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <iostream>
#include <thread>

#include <httplib.h>

namespace restinfer {

void IterationStats::merge(const IterationStats& other) {
  new_routes += other.new_routes;
  new_params += other.new_params;
  requests_sent += other.requests_sent;
  for (const auto& [cls, count] : other.verdict_histogram) verdict_histogram[cls] += count;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

namespace {

// Split an absolute URL into the scheme://host[:port] part and the rest.
std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) return {url, "/"};
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

struct HttpSender::Impl {
  explicit Impl(const std::string& base, int timeout_s) : client(base) {
    client.set_connection_timeout(timeout_s, 0);
    client.set_read_timeout(timeout_s, 0);
    client.set_write_timeout(timeout_s, 0);
    client.set_keep_alive(true);
    client.set_tcp_nodelay(true);
  }
  httplib::Client client;
};

HttpSender::HttpSender(const std::string& base_url, int timeout_s)
    : impl_(std::make_unique<Impl>(split_url(base_url).first, timeout_s)) {}

HttpSender::~HttpSender() = default;

ApiResponse HttpSender::send(const ApiRequest& req) {
  std::string target = split_url(req.base_url).second;
  if (target == "/") target.clear();
  target += render_relative(req);
  if (target.empty() || target[0] == '?') target = "/" + target;

  auto start = std::chrono::steady_clock::now();
  httplib::Result result;
  switch (req.method) {
    case HttpMethod::Get:
      result = impl_->client.Get(target);
      break;
    case HttpMethod::Delete:
      result = impl_->client.Delete(target);
      break;
    case HttpMethod::Post:
    case HttpMethod::Put:
    case HttpMethod::Patch: {
      std::string body = req.body ? req.body->dump() : "";
      if (req.method == HttpMethod::Post)
        result = impl_->client.Post(target, body, "application/json");
      else if (req.method == HttpMethod::Put)
        result = impl_->client.Put(target, body, "application/json");
      else
        result = impl_->client.Patch(target, body, "application/json");
      break;
    }
  }
  auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::steady_clock::now() - start)
                     .count();

  if (!result) throw NetworkError(httplib::to_string(result.error()));

  ApiResponse resp;
  resp.status = result->status;
  if (result->has_header("Content-Type")) resp.content_type = result->get_header_value("Content-Type");
  if (result->has_header("Location")) resp.location = result->get_header_value("Location");
  resp.body = result->body;
  resp.elapsed_ms = elapsed;
  return resp;
}

bool probe_url(const std::string& url, int timeout_s) {
  if (url.rfind("http://", 0) != 0 && url.rfind("https://", 0) != 0) return false;
  auto [base, path] = split_url(url);
  httplib::Client client(base);
  client.set_connection_timeout(timeout_s, 0);
  client.set_read_timeout(timeout_s, 0);
  auto result = client.Get(path);
  return static_cast<bool>(result);
}

GroundTruth load_ground_truth(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open ground truth file: " + path);
  nlohmann::json doc;
  in >> doc;

  GroundTruth truth;
  if (!doc.contains("routes") || !doc.at("routes").is_array() || doc.at("routes").empty())
    throw std::runtime_error("ground truth needs a non-empty routes array");

  if (doc.at("routes").front().is_string()) {
    for (const auto& route : doc.at("routes")) truth.routes.insert(route.get<std::string>());
    if (doc.contains("params")) {
      for (const auto& name : doc.at("params")) truth.params.insert(name.get<std::string>());
    }
    return truth;
  }

  // Mock API description form: derive route templates and the parameter union.
  for (const auto& route : doc.at("routes")) {
    truth.routes.insert(route.at("path").get<std::string>());
    for (const char* field : {"required_params", "optional_params"}) {
      if (!route.contains(field)) continue;
      for (const auto& name : route.at(field)) truth.params.insert(name.get<std::string>());
    }
  }
  return truth;
}

namespace {

std::string trim_copy(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

struct ServerErrorEntry {
  std::string timestamp;
  std::string method;
  std::string url;
  int status = 0;
  std::string content_type;
  std::string body;
};

class Pipeline {
 public:
  Pipeline(const RunConfig& config, const RunOptions& options)
      : config_(config), options_(options) {}

  RunResult execute();

 private:
  std::optional<std::pair<ApiResponse, Verdict>> send_and_record(const ApiRequest& req);
  void run_infer_all_base();
  void run_infer_all_mutations_routes();
  void run_infer_all_mutations_random();
  void mutate_with(const ApiRequest& seed, const MutationOperator& op);
  void post_delete_followup(const std::string& route_path, const ApiResponse& resp);
  bool recall_complete() const;
  void write_outputs(RunResult& result);

  const RunConfig& config_;
  const RunOptions& options_;
  std::shared_ptr<LlmBackend> backend_;
  std::optional<LlmGateway> gateway_;
  std::string base_url_;
  std::unique_ptr<HttpSender> http_;
  SendFn transport_;
  SpecDocument doc_;
  SeedList seeds_;
  std::optional<Rng> rng_;
  std::ofstream log_;
  IterationStats scratch_;
  IterationStats* current_stats_ = &scratch_;
  IterationStats totals_;
  std::vector<ServerErrorEntry> server_errors_;
  std::optional<GroundTruth> truth_;
  std::set<std::string> attempted_pairs_;
  std::chrono::steady_clock::time_point last_send_;
  bool any_send_ = false;
  int iterations_ = 0;
  std::string started_at_;
};

RunResult Pipeline::execute() {
  started_at_ = now_utc_iso8601();
  std::filesystem::create_directories(options_.out_dir);

  backend_ = make_backend(config_, options_.fixture_path);
  gateway_.emplace(backend_, config_.temperature, options_.cache_llm);
  rng_.emplace(options_.rng_seed);
  if (options_.ground_truth_path) truth_ = load_ground_truth(*options_.ground_truth_path);

  auto log_path = options_.out_dir / "requests.jsonl";
  log_.open(log_path, std::ios::binary | std::ios::trunc);
  if (!log_) throw std::runtime_error("cannot open request log for writing: " + log_path.string());

  UrlProber prober = options_.send_override
                         ? UrlProber([](const std::string&) { return true; })
                         : UrlProber([](const std::string& url) { return probe_url(url); });
  BaseData base = fetch_base_data(*gateway_, config_.api_name, prober);

  if (config_.server_url) {
    base_url_ = *config_.server_url;
  } else if (base.server_url) {
    base_url_ = *base.server_url;
  } else {
    throw MissingServerUrl("no server_url in config and none inferable for " + config_.api_name);
  }
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();

  doc_.title = config_.api_name;
  if (!base.description.empty()) doc_.description = base.description;
  doc_.documentation_url = base.documentation_url;
  doc_.servers = {base_url_};
  if (config_.api_key_param) doc_.api_key_name = config_.api_key_param->first;

  if (options_.send_override) {
    transport_ = options_.send_override;
  } else {
    http_ = std::make_unique<HttpSender>(base_url_);
    transport_ = [this](const ApiRequest& req) { return http_->send(req); };
  }

  // Deliberately invalid probe; its response becomes the default error sample.
  {
    ApiRequest probe = parse_request("/invalidRoute?invalidParam=invalidValue", base_url_);
    if (auto result = send_and_record(probe)) {
      doc_.default_error = {result->first.status, result->first.content_type, result->first.body};
    }
  }

  for (const auto& raw : config_.manual_seeds) {
    try {
      send_and_record(parse_request(raw, base_url_));
    } catch (const MalformedRequest& e) {
      std::cerr << "warning: skipping malformed manual seed: " << e.what() << "\n";
    }
  }

  int max_iterations = options_.max_iterations_override.value_or(config_.max_iterations);
  int quiet_iterations = 0;
  bool done = false;
  for (int iteration = 1; iteration <= max_iterations && !done; ++iteration) {
    iterations_ = iteration;
    IterationStats stats;
    current_stats_ = &stats;
    attempted_pairs_.clear();

    if (iteration == 1) {
      run_infer_all_base();
      if (seeds_.empty() && config_.manual_seeds.empty()) {
        current_stats_ = &scratch_;
        throw NoValidSeeds("no valid seeds after the base strategy for " + config_.api_name);
      }
      if (recall_complete()) done = true;
    }
    if (!done) {
      run_infer_all_mutations_routes();
      if (recall_complete()) done = true;
    }
    if (!done) {
      run_infer_all_mutations_random();
      if (recall_complete()) done = true;
    }

    if (stats.new_routes == 0 && stats.new_params == 0) {
      if (++quiet_iterations >= 2) done = true;
    } else {
      quiet_iterations = 0;
    }
    current_stats_ = &scratch_;
  }

  if (config_.descriptions) attach_descriptions(doc_, *gateway_, config_.api_name);

  RunResult result;
  result.iterations = iterations_;
  result.log_path = log_path;
  write_outputs(result);
  result.doc = doc_;
  return result;
}

std::optional<std::pair<ApiResponse, Verdict>> Pipeline::send_and_record(const ApiRequest& req) {
  std::string key = canonical_key(req);
  if (seeds_.is_invalid(key)) return std::nullopt;

  ApiRequest outgoing = req;
  if (config_.api_key_param) {
    outgoing.query_params.push_back({config_.api_key_param->first, config_.api_key_param->second});
  }

  if (config_.rate_limit_ms > 0 && any_send_) {
    std::this_thread::sleep_until(last_send_ + std::chrono::milliseconds(config_.rate_limit_ms));
  }
  last_send_ = std::chrono::steady_clock::now();
  any_send_ = true;

  nlohmann::json line = {
      {"timestamp", now_utc_iso8601()},
      {"api", config_.api_name},
      {"method", to_string(req.method)},
      {"url", render(outgoing)},
  };

  ApiResponse resp;
  bool transported = true;
  try {
    resp = transport_(outgoing);
  } catch (const NetworkError&) {
    transported = false;
  }

  ++current_stats_->requests_sent;
  ++totals_.requests_sent;

  if (!transported) {
    line["status"] = 0;
    line["content_type"] = "";
    line["body_digest"] = fnv1a_hex("");
    line["verdict"] = "NetworkFail";
    line["elapsed_ms"] = 0;
    log_ << line.dump() << "\n";
    log_.flush();
    ++current_stats_->verdict_histogram["NetworkFail"];
    ++totals_.verdict_histogram["NetworkFail"];
    return std::nullopt;
  }

  Verdict verdict = classify_response(resp);
  line["status"] = resp.status;
  line["content_type"] = resp.content_type.value_or("");
  line["body_digest"] = fnv1a_hex(resp.body);
  line["verdict"] = to_string(verdict.cls);
  line["elapsed_ms"] = resp.elapsed_ms;
  log_ << line.dump() << "\n";
  log_.flush();
  ++current_stats_->verdict_histogram[to_string(verdict.cls)];
  ++totals_.verdict_histogram[to_string(verdict.cls)];

  switch (verdict.cls) {
    case VerdictClass::Valid: {
      ChangeSummary change = record_valid(doc_, req, resp);
      if (change.new_route) ++current_stats_->new_routes;
      current_stats_->new_params += change.new_params;
      seeds_.add_seed(req);
      break;
    }
    case VerdictClass::ClientError:
    case VerdictClass::SoftError:
      seeds_.mark_invalid(key);
      record_invalid(doc_, req, resp);
      break;
    case VerdictClass::ServerError:
      seeds_.mark_invalid(key);
      server_errors_.push_back({line["timestamp"].get<std::string>(), to_string(req.method),
                                render(outgoing), resp.status, resp.content_type.value_or(""),
                                resp.body});
      break;
  }
  return std::make_pair(resp, verdict);
}

void Pipeline::run_infer_all_base() {
  PromptContext ctx;
  ctx.api_name = config_.api_name;
  auto items = parse_value_list(gateway_->complete(PromptKind::RouteList, ctx).text);

  std::set<std::string> announced;
  for (auto item : items) {
    HttpMethod method = HttpMethod::Get;
    if (auto space = item.find(' '); space != std::string::npos) {
      if (auto parsed = parse_method(item.substr(0, space))) {
        method = *parsed;
        item = trim_copy(item.substr(space + 1));
      }
    }
    while (!item.empty() && item.front() == '/') item.erase(item.begin());
    while (!item.empty() && item.back() == '/') item.pop_back();
    if (item.empty()) continue;
    std::string route_path = "/" + item;
    if (!announced.insert(to_string(method) + " " + route_path).second) continue;

    if (method == HttpMethod::Get) {
      ApiRequest bare;
      try {
        bare = parse_request(route_path, base_url_);
      } catch (const MalformedRequest&) {
        continue;
      }
      send_and_record(bare);

      PromptContext param_ctx;
      param_ctx.api_name = config_.api_name;
      param_ctx.route = route_path;
      auto params = parse_value_list(gateway_->complete(PromptKind::ParamList, param_ctx).text);
      for (const auto& proposed : params) {
        std::string name = proposed;
        std::string value = "1";
        if (auto eq = proposed.find('='); eq != std::string::npos) {
          name = proposed.substr(0, eq);
          value = proposed.substr(eq + 1);
        }
        if (name.empty() || name.find('&') != std::string::npos) continue;
        ApiRequest probe = bare;
        probe.query_params = {{name, value}};
        send_and_record(probe);
      }
    } else if (method == HttpMethod::Post || method == HttpMethod::Put ||
               method == HttpMethod::Patch) {
      nlohmann::json payload =
          fetch_payload_example(*gateway_, config_.api_name, route_path, method);
      ApiRequest req;
      try {
        req = parse_request(route_path, base_url_, method);
      } catch (const MalformedRequest&) {
        continue;
      }
      req.body = payload;
      auto result = send_and_record(req);
      if (method == HttpMethod::Post && result &&
          result->second.cls == VerdictClass::Valid) {
        post_delete_followup(route_path, result->first);
      }
    } else {
      try {
        send_and_record(parse_request(route_path, base_url_, method));
      } catch (const MalformedRequest&) {
      }
    }
  }
}

void Pipeline::post_delete_followup(const std::string& route_path, const ApiResponse& resp) {
  std::string resource;
  if (resp.location && !resp.location->empty()) {
    resource = *resp.location;
    if (resource.rfind(base_url_, 0) == 0) resource = resource.substr(base_url_.size());
  } else {
    nlohmann::json body = nlohmann::json::parse(resp.body, nullptr, false);
    if (body.is_object() && body.contains("id") && body.at("id").is_number_integer()) {
      resource = route_path + "/" + std::to_string(body.at("id").get<long long>());
    }
  }
  if (resource.empty() || resource[0] != '/') return;
  try {
    send_and_record(parse_request(resource, base_url_, HttpMethod::Delete));
  } catch (const MalformedRequest&) {
  }
}

void Pipeline::run_infer_all_mutations_routes() {
  if (seeds_.empty()) return;
  auto pool = seeds_.routes();
  for (const auto& route : pool) {
    ApiRequest seed;
    try {
      seed = select_seed(seeds_, SelectionMode::RandomRoute, {route}, *rng_);
    } catch (const EmptySeedList&) {
      continue;
    }
    for (const auto& op : all_operators()) mutate_with(seed, op);
  }
}

void Pipeline::run_infer_all_mutations_random() {
  if (seeds_.empty()) return;
  auto pool = seeds_.routes();
  SelectionMode mode =
      parse_selection_mode(config_.seed_selection).value_or(SelectionMode::RandomRoute);
  for (const auto& op : all_operators()) {
    ApiRequest seed = select_seed(seeds_, mode, pool, *rng_);
    mutate_with(seed, op);
  }
}

void Pipeline::mutate_with(const ApiRequest& seed, const MutationOperator& op) {
  if (!is_applicable(op, seed)) return;
  if (!attempted_pairs_.insert(op.name() + "|" + canonical_key(seed)).second) return;

  MaskedRequest masked = apply_mask(seed, op, *rng_);
  std::vector<std::string> values;
  if (auto token = op.token()) {
    PromptContext ctx;
    ctx.api_name = config_.api_name;
    ctx.token = mask_token_text(*token);
    ctx.masked_template = masked.rendered_template;
    values = parse_value_list(gateway_->complete(PromptKind::MaskFill, ctx).text);
  }
  for (const auto& req : instantiate(masked, values)) send_and_record(req);
}

bool Pipeline::recall_complete() const {
  if (!truth_) return false;
  for (const auto& route : truth_->routes) {
    if (doc_.paths.find(route) == doc_.paths.end()) return false;
  }
  std::set<std::string> found;
  for (const auto& [path, entry] : doc_.paths) {
    (void)path;
    for (const auto& [method, op] : entry.operations) {
      (void)method;
      for (const auto& [name, param] : op.parameters) {
        (void)param;
        found.insert(name);
      }
    }
  }
  for (const auto& name : truth_->params) {
    if (found.count(name) == 0) return false;
  }
  return true;
}

void Pipeline::write_outputs(RunResult& result) {
  RunReport report;
  report.api_name = config_.api_name;
  report.started_at = started_at_;
  report.requests_sent = totals_.requests_sent;
  report.verdict_histogram = totals_.verdict_histogram;
  report.routes_found = static_cast<long long>(doc_.paths.size());
  {
    std::set<std::string> unique_params;
    for (const auto& [path, entry] : doc_.paths) {
      (void)path;
      for (const auto& [method, op] : entry.operations) {
        (void)method;
        for (const auto& [name, param] : op.parameters) {
          (void)param;
          unique_params.insert(name);
        }
      }
    }
    report.params_found = static_cast<long long>(unique_params.size());
  }
  report.token_usage = gateway_->usage();
  for (const auto& entry : server_errors_) {
    report.server_errors.push_back(entry.method + " " + entry.url);
  }
  report = finalize_report(std::move(report),
                           {config_.price_input_per_1m, config_.price_output_per_1m});

  result.report = report;

  result.spec_json_path = options_.out_dir / (config_.api_name + ".openapi.json");
  result.spec_yaml_path = options_.out_dir / (config_.api_name + ".openapi.yaml");
  {
    std::ofstream out(result.spec_json_path, std::ios::binary | std::ios::trunc);
    out << emit(doc_, SpecFormat::Json);
  }
  {
    std::ofstream out(result.spec_yaml_path, std::ios::binary | std::ios::trunc);
    out << emit(doc_, SpecFormat::Yaml);
  }

  result.server_errors_path = options_.out_dir / "server_errors.json";
  {
    nlohmann::json errors = nlohmann::json::array();
    for (const auto& entry : server_errors_) {
      errors.push_back({{"timestamp", entry.timestamp},
                        {"method", entry.method},
                        {"url", entry.url},
                        {"status", entry.status},
                        {"content_type", entry.content_type},
                        {"body", entry.body}});
    }
    nlohmann::json doc = {{"api_name", config_.api_name}, {"errors", errors}};
    std::ofstream out(result.server_errors_path, std::ios::binary | std::ios::trunc);
    out << doc.dump(2) << "\n";
  }

  result.report_path = options_.out_dir / "run_report.json";
  {
    nlohmann::json doc = report_to_json(report);
    doc["iterations"] = iterations_;
    std::ofstream out(result.report_path, std::ios::binary | std::ios::trunc);
    out << doc.dump(2) << "\n";
  }
}

}  // namespace

RunResult run(const RunConfig& config, const RunOptions& options) {
  Pipeline pipeline(config, options);
  return pipeline.execute();
}

}  // namespace restinfer
