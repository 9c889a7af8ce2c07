#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI/CLI.hpp>
#include <nlohmann/json.hpp>

#include "restinfer/config.hpp"
#include "restinfer/orchestrator.hpp"
#include "restinfer/report.hpp"
#include "restinfer/spec_builder.hpp"
#include "restinfer/testbed.hpp"

namespace {

volatile std::sig_atomic_t g_stop_requested = 0;

void handle_signal(int) { g_stop_requested = 1; }

int run_infer(const std::string& config_path, const std::optional<std::string>& fixture_path,
              const std::string& out_dir, const std::optional<std::string>& ground_truth_path,
              std::uint64_t rng_seed, std::optional<int> max_iterations, bool no_cache) {
  auto configs = restinfer::load_config(config_path);
  int failures = 0;
  for (const auto& config : configs) {
    restinfer::RunOptions options;
    options.out_dir = std::filesystem::path(out_dir) / config.api_name;
    options.fixture_path = fixture_path;
    options.rng_seed = rng_seed;
    options.ground_truth_path = ground_truth_path;
    options.cache_llm = !no_cache;
    options.max_iterations_override = max_iterations;

    try {
      restinfer::RunResult result = restinfer::run(config, options);
      const auto& report = result.report;
      std::cout << config.api_name << ": " << report.routes_found << " routes, "
                << report.params_found << " params, " << report.requests_sent
                << " requests over " << result.iterations << " iteration"
                << (result.iterations == 1 ? "" : "s") << ", cost " << report.model_cost
                << "\n";
      std::cout << "  spec: " << result.spec_json_path.string() << "\n";
      std::cout << "  log:  " << result.log_path.string() << "\n";
      if (ground_truth_path) {
        auto truth = restinfer::load_ground_truth(*ground_truth_path);
        std::size_t route_hits = 0;
        for (const auto& route : truth.routes) {
          if (result.doc.paths.count(route) > 0) ++route_hits;
        }
        std::set<std::string> found;
        for (const auto& [path, entry] : result.doc.paths) {
          (void)path;
          for (const auto& [method, op] : entry.operations) {
            (void)method;
            for (const auto& [name, param] : op.parameters) {
              (void)param;
              found.insert(name);
            }
          }
        }
        std::size_t param_hits = 0;
        for (const auto& name : truth.params) {
          if (found.count(name) > 0) ++param_hits;
        }
        std::cout << "  recall: routes " << route_hits << "/" << truth.routes.size()
                  << ", params " << param_hits << "/" << truth.params.size() << "\n";
      }
    } catch (const std::exception& e) {
      std::cerr << "error: " << config.api_name << ": " << e.what() << "\n";
      ++failures;
    }
  }
  return failures == 0 ? 0 : 1;
}

int run_validate(const std::string& spec_path) {
  std::ifstream in(spec_path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open " << spec_path << "\n";
    return 1;
  }
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) {
    std::cerr << "error: " << spec_path << " is not valid JSON (YAML input is not supported)\n";
    return 1;
  }
  auto problems = restinfer::validate_oas(doc);
  if (problems.empty()) {
    std::cout << spec_path << ": ok\n";
    return 0;
  }
  for (const auto& problem : problems) std::cout << problem << "\n";
  std::cout << problems.size() << " problem" << (problems.size() == 1 ? "" : "s") << " found\n";
  return 1;
}

int run_report(const std::string& log_path) {
  std::cout << restinfer::render_status_summary(log_path);
  return 0;
}

int run_serve_mock(const std::string& spec_path, int port) {
  auto spec = restinfer::testbed::load_mock_spec(spec_path);
  restinfer::testbed::MockServer server(std::move(spec), port);
  // Flushed so wrappers reading a pipe or file see the address immediately.
  std::cout << "serving at " << server.base_url() << " (Ctrl-C to stop)" << std::endl;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  while (g_stop_requested == 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  server.stop();
  return 0;
}

int run_make_fixture(const std::string& spec_path, const std::string& out_path,
                     const std::optional<std::string>& base_url,
                     const std::vector<std::string>& dropped) {
  auto spec = restinfer::testbed::load_mock_spec(spec_path);
  std::set<std::string> dropped_set(dropped.begin(), dropped.end());
  nlohmann::json fixture =
      restinfer::testbed::build_full_knowledge_fixture(spec, base_url, dropped_set);
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) {
    std::cerr << "error: cannot write " << out_path << "\n";
    return 1;
  }
  out << fixture.dump(2) << "\n";
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Black-box REST API exploration and OpenAPI synthesis"};
  app.require_subcommand(1);

  std::string config_path;
  std::string fixture_path;
  std::string out_dir = "out";
  std::string ground_truth_path;
  std::uint64_t rng_seed = 42;
  int max_iterations = 0;
  bool no_cache = false;

  auto* infer = app.add_subcommand("infer", "Explore an API and emit an OpenAPI document");
  infer->add_option("--config", config_path, "JSON run configuration")->required();
  infer->add_option("--llm-fixture", fixture_path, "Scripted-backend completion fixture");
  infer->add_option("--out", out_dir, "Output directory root (per-API subdirectory is created)");
  infer->add_option("--ground-truth", ground_truth_path,
                    "Evaluation-mode ground truth; stops early at full recall");
  infer->add_option("--seed", rng_seed, "Random sequence seed");
  infer->add_option("--max-iterations", max_iterations, "Override the configured iteration cap");
  infer->add_flag("--no-llm-cache", no_cache, "Disable the per-run completion cache");

  std::string spec_path;
  auto* validate = app.add_subcommand("validate", "Structural checks on an OpenAPI JSON document");
  validate->add_option("--spec", spec_path, "OpenAPI document (JSON)")->required();

  std::string log_path;
  auto* report = app.add_subcommand("report", "Status summary table from a request log");
  report->add_option("--log", log_path, "requests.jsonl path")->required();

  std::string mock_spec_path;
  int mock_port = 0;
  auto* serve = app.add_subcommand("serve-mock", "Serve a mock API description over HTTP");
  serve->add_option("--spec", mock_spec_path, "Mock API description (JSON)")->required();
  serve->add_option("--port", mock_port, "Port (0 picks an ephemeral one)");

  std::string fixture_out;
  std::string fixture_base_url;
  std::vector<std::string> dropped_routes;
  auto* make_fixture =
      app.add_subcommand("make-fixture", "Completion fixture covering a mock API's vocabulary");
  make_fixture->add_option("--spec", mock_spec_path, "Mock API description (JSON)")->required();
  make_fixture->add_option("--out", fixture_out, "Fixture output path")->required();
  make_fixture->add_option("--base-url", fixture_base_url, "Base URL for the base-data fields");
  make_fixture->add_option("--drop", dropped_routes,
                           "Route name to withhold from the fixture (repeatable)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (infer->parsed()) {
      return run_infer(config_path,
                       fixture_path.empty() ? std::nullopt
                                            : std::optional<std::string>(fixture_path),
                       out_dir,
                       ground_truth_path.empty() ? std::nullopt
                                                 : std::optional<std::string>(ground_truth_path),
                       rng_seed, max_iterations > 0 ? std::optional<int>(max_iterations)
                                                    : std::nullopt,
                       no_cache);
    }
    if (validate->parsed()) return run_validate(spec_path);
    if (report->parsed()) return run_report(log_path);
    if (serve->parsed()) return run_serve_mock(mock_spec_path, mock_port);
    if (make_fixture->parsed()) {
      return run_make_fixture(mock_spec_path, fixture_out,
                              fixture_base_url.empty()
                                  ? std::nullopt
                                  : std::optional<std::string>(fixture_base_url),
                              dropped_routes);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
