#pragma once

#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <thread>

#include "webagent/agent_service.hpp"
#include "webagent/http_server.hpp"

namespace webagent {

/// AgentService behind an HTTP listener: connection owner gate, TLS when
/// configured, and a periodic expiry sweep (every TTL/4).
class AgentDaemon {
 public:
  /// Loads the trusted servers file and keys named by `config`. Errors:
  /// std::invalid_argument for a bad config, Error for load failures.
  explicit AgentDaemon(const AgentConfig& config, EventLog log = EventLog(),
                       RandomSource& rng = system_random());
  ~AgentDaemon();

  /// Binds and serves on background threads; returns the bound port.
  std::uint16_t start();
  /// Binds and serves on the calling thread until stop().
  void run();
  void stop();

  AgentService& service() { return *service_; }
  std::uint16_t port() const { return server_->port(); }

 private:
  void start_sweeper();

  AgentConfig config_;
  EventLog log_;
  std::shared_ptr<TrustStore> trust_;
  std::unique_ptr<AgentService> service_;
  OwnerGuard guard_;
  std::unique_ptr<HttpServer> server_;

  std::mutex mu_;
  std::condition_variable cv_;
  bool stopping_ = false;
  std::thread sweeper_;
};

}  // namespace webagent
