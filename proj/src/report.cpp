#include "restinfer/report.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace restinfer {

double model_cost(const TokenUsage& usage, const PriceTable& prices) {
  return static_cast<double>(usage.input_tokens) * prices.input_per_1m / 1e6 +
         static_cast<double>(usage.output_tokens) * prices.output_per_1m / 1e6;
}

RunReport finalize_report(RunReport state, const PriceTable& prices) {
  state.model_cost = model_cost(state.token_usage, prices);
  if (state.ended_at.empty()) state.ended_at = now_utc_iso8601();
  return state;
}

nlohmann::json report_to_json(const RunReport& report) {
  nlohmann::json histogram = nlohmann::json::object();
  for (const auto& [cls, count] : report.verdict_histogram) histogram[cls] = count;
  return {
      {"api_name", report.api_name},
      {"started_at", report.started_at},
      {"ended_at", report.ended_at},
      {"requests_sent", report.requests_sent},
      {"verdict_histogram", histogram},
      {"routes_found", report.routes_found},
      {"params_found", report.params_found},
      {"token_usage",
       {{"input_tokens", report.token_usage.input_tokens},
        {"output_tokens", report.token_usage.output_tokens}}},
      {"model_cost", report.model_cost},
      {"server_errors", report.server_errors},
  };
}

std::string now_utc_iso8601() {
  using namespace std::chrono;
  auto now = system_clock::now();
  auto ms = duration_cast<milliseconds>(now.time_since_epoch()) % 1000;
  std::time_t t = system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setfill('0') << std::setw(3)
      << ms.count() << 'Z';
  return out.str();
}

std::vector<LogLine> read_request_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LogParseError("cannot open log: " + path);
  std::vector<LogLine> lines;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (raw.empty()) continue;
    nlohmann::json obj = nlohmann::json::parse(raw, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      throw LogParseError("line " + std::to_string(line_no) + ": not a JSON object");
    }
    LogLine line;
    try {
      line.api = obj.value("api", "");
      line.method = obj.value("method", "");
      line.url = obj.value("url", "");
      line.status = obj.value("status", 0);
      line.verdict = obj.value("verdict", "");
    } catch (const nlohmann::json::exception& e) {
      throw LogParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

std::string render_status_summary(const std::string& log_path) {
  struct Row {
    long long ok = 0, client = 0, server = 0, soft = 0, other = 0;
  };
  std::map<std::string, Row> rows;
  for (const auto& line : read_request_log(log_path)) {
    Row& row = rows[line.api];
    if (line.status >= 200 && line.status <= 299 && line.verdict == "Valid") {
      ++row.ok;
    } else if (line.status >= 400 && line.status <= 499) {
      ++row.client;
    } else if (line.status >= 500 && line.status <= 599) {
      ++row.server;
    } else if (line.verdict == "SoftError") {
      ++row.soft;
    } else {
      ++row.other;
    }
  }

  std::ostringstream out;
  out << std::left << std::setw(20) << "api" << std::right << std::setw(8) << "2xx"
      << std::setw(8) << "4xx" << std::setw(8) << "5xx" << std::setw(8) << "soft"
      << std::setw(8) << "other" << "\n";
  for (const auto& [api, row] : rows) {
    out << std::left << std::setw(20) << api << std::right << std::setw(8) << row.ok
        << std::setw(8) << row.client << std::setw(8) << row.server << std::setw(8) << row.soft
        << std::setw(8) << row.other << "\n";
  }
  if (rows.empty()) {
    out << std::left << std::setw(20) << "(none)" << std::right << std::setw(8) << 0
        << std::setw(8) << 0 << std::setw(8) << 0 << std::setw(8) << 0 << std::setw(8) << 0
        << "\n";
  }
  return out.str();
}

}  // namespace restinfer
