#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "restinfer/spec_builder.hpp"

namespace httplib {
class Server;
}

namespace restinfer::testbed {

struct PortBindError : std::runtime_error {
  explicit PortBindError(const std::string& what) : std::runtime_error(what) {}
};

struct MockSpecError : std::runtime_error {
  explicit MockSpecError(const std::string& what) : std::runtime_error(what) {}
};

/// One mock endpoint. `path` is a template whose {id} segments match
/// all-digit request segments only.
struct MockRoute {
  std::string path;
  HttpMethod method = HttpMethod::Get;
  std::vector<std::string> required_params;
  std::vector<std::string> optional_params;
  int success_status = 200;
  nlohmann::json success_body = nlohmann::json::object();
  // All listed params present together -> 500 with the canned error body.
  std::vector<std::string> http500_on;
  bool creates = false;  // POST allocates an id, returns it plus a Location header
  bool deletes = false;  // DELETE succeeds only for a previously created id
  nlohmann::json payload_example = nlohmann::json::object();
};

enum class ErrorMode { Http404, Http200ErrorJson, HtmlError };

struct MockApiSpec {
  std::string name;
  ErrorMode error_mode = ErrorMode::Http404;
  std::optional<std::string> api_key_name;  // required on every request when set
  std::vector<MockRoute> routes;
};

MockApiSpec parse_mock_spec(const nlohmann::json& doc);
MockApiSpec load_mock_spec(const std::string& path);

/// In-process HTTP server answering per a MockApiSpec. Binds to loopback on
/// construction (ephemeral port unless one is given) and stops on destruction.
class MockServer {
 public:
  explicit MockServer(MockApiSpec spec, int port = 0);
  ~MockServer();

  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  int port() const { return port_; }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  /// "METHOD /path?query" per handled request, in arrival order.
  std::vector<std::string> request_log() const;

  void stop();

 private:
  MockApiSpec spec_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mutex_;
  std::vector<std::string> log_;
  std::set<long long> created_;
  long long next_id_ = 1;
};

/// Scripted-backend fixture covering the whole mock vocabulary. Routes whose
/// first-seen name is in `dropped_route_names` are left out of the route list
/// and route-fill vocabulary (parameter vocabulary is kept intact).
/// `base_url`, when known, fills the base-data URL fields.
nlohmann::json build_full_knowledge_fixture(const MockApiSpec& spec,
                                            const std::optional<std::string>& base_url = {},
                                            const std::set<std::string>& dropped_route_names = {});

struct RecallResult {
  std::size_t truth_routes = 0;
  std::size_t found_routes = 0;
  std::size_t truth_params = 0;
  std::size_t found_params = 0;
  double route_recall = 0.0;
  double param_recall = 0.0;
};

/// Fraction of ground-truth route templates and unique parameter names that
/// appear in the inferred document.
RecallResult compute_recall(const MockApiSpec& ground_truth, const SpecDocument& doc);

/// Ground-truth sets in the evaluation-mode file format:
/// {"routes": [...], "params": [...]}.
nlohmann::json ground_truth_json(const MockApiSpec& spec);

}  // namespace restinfer::testbed
