#pragma once

#include <chrono>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "restinfer/llm.hpp"

namespace restinfer {

struct LogParseError : std::runtime_error {
  explicit LogParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Per-run metrics, reproducible from the JSONL request log.
struct RunReport {
  std::string api_name;
  std::string started_at;  // UTC ISO-8601 with milliseconds
  std::string ended_at;
  long long requests_sent = 0;
  std::map<std::string, long long> verdict_histogram;
  long long routes_found = 0;
  long long params_found = 0;
  TokenUsage token_usage;
  double model_cost = 0.0;
  std::vector<std::string> server_errors;  // rendered request URLs with a 5xx outcome
};

struct PriceTable {
  double input_per_1m = 0.0;
  double output_per_1m = 0.0;
};

/// Cost of a token count under a per-million price table.
double model_cost(const TokenUsage& usage, const PriceTable& prices);

/// Snapshot the mutable run state into a finished report with the cost
/// formula applied.
RunReport finalize_report(RunReport state, const PriceTable& prices);

nlohmann::json report_to_json(const RunReport& report);

std::string now_utc_iso8601();

/// One parsed line of the requests.jsonl log.
struct LogLine {
  std::string api;
  std::string method;
  std::string url;
  int status = 0;
  std::string verdict;
};

/// Parse a JSONL request log; malformed lines raise LogParseError with the
/// line number.
std::vector<LogLine> read_request_log(const std::string& path);

/// Fixed-order text table: api | 2xx | 4xx | 5xx | soft | other.
std::string render_status_summary(const std::string& log_path);

}  // namespace restinfer
