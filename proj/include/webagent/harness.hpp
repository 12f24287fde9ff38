#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "webagent/agent_service.hpp"
#include "webagent/http.hpp"
#include "webagent/http_server.hpp"
#include "webagent/refserver.hpp"

namespace webagent::harness {

/// Where a relay sends requests.
class Endpoint {
 public:
  virtual ~Endpoint() = default;
  virtual HttpResponse send(const HttpRequest& request) = 0;
};

/// Calls a handler directly after sleeping `latency` (the injected one-way
/// network cost of the leg).
class InProcessEndpoint final : public Endpoint {
 public:
  using Handler = std::function<HttpResponse(const HttpRequest&)>;
  explicit InProcessEndpoint(Handler handler, std::chrono::microseconds latency = {})
      : handler_(std::move(handler)), latency_(latency) {}

  HttpResponse send(const HttpRequest& request) override;
  void set_latency(std::chrono::microseconds latency) { latency_ = latency; }

 private:
  Handler handler_;
  std::chrono::microseconds latency_;
};

class RemoteEndpoint final : public Endpoint {
 public:
  explicit RemoteEndpoint(std::string base_url, ClientOptions options = {})
      : base_url_(std::move(base_url)), options_(options) {}
  HttpResponse send(const HttpRequest& request) override { return http_fetch(base_url_, request, options_); }

 private:
  std::string base_url_;
  ClientOptions options_;
};

/// Ordered (direction, base64 message) pairs.
struct Transcript {
  std::vector<std::pair<std::string, std::string>> lines;
  std::string str() const;
};

/// Interception points used by the mutation suite. Leg 0 is the key
/// exchange, leg 1 the authentication.
struct RelayHooks {
  std::function<void(int leg, HttpRequest& to_agent)> to_agent;
  std::function<void(int leg, std::string& agent_reply)> to_server;
};

struct RelayConfig {
  /// Page URL: sent to the agent as Referer; its origin as Origin.
  std::string page_url = "https://webssh.example.com/ssh/";
};

struct RunReport {
  bool ok = false;
  /// kex_request, kex_response, auth_request, auth_response (ms).
  std::map<std::string, double> phase_ms;
  double total_ms = 0;
  /// Requests to the trusted server.
  int request_count = 0;
  int agent_requests = 0;
  std::optional<std::string> failure_reason;
  std::string failed_phase;
  int agent_status = 0;
  std::string verdict;
};

/// The page relay: moves opaque messages between server and agent.
RunReport run_relay(Endpoint& server, Endpoint& agent, const RelayConfig& config, const RelayHooks& hooks = {},
                    Transcript* transcript = nullptr);

// ---------------------------------------------------------------------------
// In-process stack

std::filesystem::path default_fixture_dir();

struct StackConfig {
  std::filesystem::path fixtures = default_fixture_dir();
  /// Defaults to fixtures/trusted_servers.
  std::optional<std::vector<TrustedServerEntry>> trusted;
  /// Defaults to fixtures/keys/user_rsa and user_ed25519.
  std::vector<std::filesystem::path> agent_keys;
  /// Defaults to fixtures/keys/server_rsa.pem.
  std::filesystem::path server_key;
  /// Defaults to fixtures/authorized_keys.
  std::filesystem::path authorized_keys;
  SessionConfig sessions;
  crypto::DhPolicy dh_policy;
  std::vector<std::pair<std::string, Bytes>> response_options;
  refserver::RefServerApp::Options server;
  RelayConfig relay;
  /// Injected on each of the four server legs.
  std::chrono::microseconds server_latency{0};
  /// Seeds deterministic RNGs for both sides (test hook builds only).
  std::optional<std::uint64_t> seed;
};

class Stack {
 public:
  explicit Stack(StackConfig config);
  ~Stack();

  RunReport run(const RelayHooks& hooks = {}, Transcript* transcript = nullptr);

  AgentService& agent() { return *agent_; }
  refserver::RefServerApp& server() { return *server_; }
  const CapturedLog& agent_log() const { return agent_log_; }
  void set_server_latency(std::chrono::microseconds latency) { server_endpoint_->set_latency(latency); }
  /// Shifts the agent's clock forward.
  void advance_agent_clock(Clock::duration d) { clock_offset_ += d; }

  /// Most recent session as each side sees it.
  std::optional<SessionState> last_agent_session;
  std::optional<refserver::PendingAuth> last_server_session;

  /// Error class of the agent's latest rejection, if any.
  std::optional<std::string> last_agent_error() const;

  const StackConfig& config() const { return config_; }

 private:
  StackConfig config_;
  std::unique_ptr<RandomSource> agent_rng_;
  std::unique_ptr<RandomSource> server_rng_;
  CapturedLog agent_log_;
  std::unique_ptr<AgentService> agent_;
  std::unique_ptr<refserver::RefServerApp> server_;
  std::unique_ptr<InProcessEndpoint> agent_endpoint_;
  std::unique_ptr<InProcessEndpoint> server_endpoint_;
  Clock::duration clock_offset_{0};
};

RunReport run_e2e(const StackConfig& config);

struct BenchSummary {
  int latency_ms = 0;
  int trials = 0;
  std::vector<double> totals_ms;
  double median_ms = 0;
  double p95_ms = 0;
  int failures = 0;
};

BenchSummary bench(StackConfig config, int latency_ms, int trials);

/// Nearest-rank percentile of an unsorted sample.
double percentile(std::vector<double> values, double p);

struct MutationOutcome {
  std::string name;
  std::set<std::string> expected;
  bool rejected = false;
  std::string observed;
  bool pass() const { return rejected && expected.contains(observed); }
};

std::vector<MutationOutcome> mutate_suite(const StackConfig& base);

#ifdef WEBAGENT_TEST_HOOKS
/// Deterministic transcript of one complete flow.
Transcript seeded_transcript(std::uint64_t seed, StackConfig config = {});
#endif

}  // namespace webagent::harness
