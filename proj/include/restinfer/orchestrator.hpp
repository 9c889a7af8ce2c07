#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "restinfer/config.hpp"
#include "restinfer/llm.hpp"
#include "restinfer/mutation.hpp"
#include "restinfer/report.hpp"
#include "restinfer/spec_builder.hpp"
#include "restinfer/verdict.hpp"

namespace restinfer {

struct NoValidSeeds : std::runtime_error {
  explicit NoValidSeeds(const std::string& what) : std::runtime_error(what) {}
};

struct NetworkError : std::runtime_error {
  explicit NetworkError(const std::string& what) : std::runtime_error(what) {}
};

struct MissingServerUrl : std::runtime_error {
  explicit MissingServerUrl(const std::string& what) : std::runtime_error(what) {}
};

enum class StrategyKind { InferAllBase, InferAllMutationsRoutes, InferAllMutationsRandom };

struct IterationStats {
  int new_routes = 0;
  int new_params = 0;
  long long requests_sent = 0;
  std::map<std::string, long long> verdict_histogram;

  void merge(const IterationStats& other);
};

/// FNV-1a 64-bit digest, hex-encoded; used to reference response bodies from
/// the request log without storing them.
std::string fnv1a_hex(const std::string& bytes);

/// HTTP client for one base URL; keeps the connection alive across sends.
class HttpSender {
 public:
  explicit HttpSender(const std::string& base_url, int timeout_s = 30);
  ~HttpSender();

  HttpSender(const HttpSender&) = delete;
  HttpSender& operator=(const HttpSender&) = delete;

  /// Throws NetworkError on transport failure (refused, timeout, DNS).
  ApiResponse send(const ApiRequest& req);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Probe used while resolving base data: true iff the URL answers at all.
bool probe_url(const std::string& url, int timeout_s = 10);

struct GroundTruth {
  std::set<std::string> routes;
  std::set<std::string> params;
};

/// Evaluation-mode ground truth: either {"routes":[...],"params":[...]} or a
/// mock API description whose routes carry path/required/optional fields.
GroundTruth load_ground_truth(const std::string& path);

struct RunOptions {
  std::filesystem::path out_dir;  // created if missing; files land directly here
  std::optional<std::string> fixture_path;
  std::uint64_t rng_seed = 42;
  std::optional<std::string> ground_truth_path;
  bool cache_llm = true;
  std::optional<int> max_iterations_override;
  SendFn send_override;  // tests inject a transport; empty means real HTTP
};

struct RunResult {
  RunReport report;
  SpecDocument doc;
  int iterations = 0;
  std::filesystem::path spec_json_path;
  std::filesystem::path spec_yaml_path;
  std::filesystem::path log_path;
  std::filesystem::path report_path;
  std::filesystem::path server_errors_path;
};

/// End-to-end pipeline for one API: base data, default-error probe, the
/// iteration loop over the three strategies, then file emission.
RunResult run(const RunConfig& config, const RunOptions& options);

}  // namespace restinfer
