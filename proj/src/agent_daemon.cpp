#include "webagent/agent_daemon.hpp"

#include <algorithm>

#include "webagent/error.hpp"

namespace webagent {

namespace {

AgentService::Options service_options(const AgentConfig& config) {
  AgentService::Options o;
  o.sessions.ttl = config.session_ttl;
  o.sessions.capacity = config.session_capacity;
  return o;
}

}  // namespace

AgentDaemon::AgentDaemon(const AgentConfig& config, EventLog log, RandomSource& rng)
    : config_(config), log_(std::move(log)), trust_(std::make_shared<TrustStore>()), guard_(config.owner_policy) {
  validate(config_, true);
  auto warn = [this](const std::string& m) { log_.emit("warning", {{"message", m}}); };

  TrustStore::LoadOptions trust_options;
  trust_options.strict_permissions = config_.strict_permissions;
  trust_->reload(config_.trusted_servers_path, trust_options, warn);

  KeyLoadOptions key_options;
  key_options.strict_permissions = config_.strict_permissions;
  auto keys = load_keyring(config_.key_paths, key_options, warn);
  log_.emit("keys_loaded", {{"count", keys.size()}, {"trusted_servers", trust_->snapshot()->size()}});

  service_ = std::make_unique<AgentService>(trust_, std::move(keys), service_options(config_), rng, log_);

  HttpServer::Options http;
  http.tls_cert = config_.tls_cert;
  http.tls_key = config_.tls_key;
  http.payload_max_length = 3 * wire::kMaxEncodedMessage + 4096;

  auto gate = [this](const SocketAddress& peer, const SocketAddress& local) -> std::optional<HttpResponse> {
    auto decision = guard_.authorize(peer, local);
    if (!decision.note.empty())
      log_.emit(decision.allowed ? "owner_check_warning" : "connection_refused",
                {{"peer", peer.to_string()}, {"note", decision.note}});
    if (decision.allowed) return std::nullopt;
    return HttpResponse{403, "text/plain", {}, "forbidden"};
  };
  server_ = std::make_unique<HttpServer>([this](const HttpRequest& r) { return service_->handle(r); },
                                         http, gate);
}

AgentDaemon::~AgentDaemon() { stop(); }

void AgentDaemon::start_sweeper() {
  auto interval = std::max<Clock::duration>(config_.session_ttl / 4, std::chrono::milliseconds(250));
  sweeper_ = std::thread([this, interval] {
    std::unique_lock lock(mu_);
    while (!cv_.wait_for(lock, interval, [this] { return stopping_; })) {
      lock.unlock();
      service_->sweep(Clock::now());
      lock.lock();
    }
  });
}

std::uint16_t AgentDaemon::start() {
  auto port = server_->bind(config_.bind_address, config_.port);
  log_.emit("listening", {{"address", config_.bind_address}, {"port", port}, {"tls", config_.tls_cert.has_value()},
                          {"owner_policy", std::string(to_string(config_.owner_policy))}});
  start_sweeper();
  server_->start();
  return port;
}

void AgentDaemon::run() {
  auto port = server_->bind(config_.bind_address, config_.port);
  log_.emit("listening", {{"address", config_.bind_address}, {"port", port}, {"tls", config_.tls_cert.has_value()},
                          {"owner_policy", std::string(to_string(config_.owner_policy))}});
  start_sweeper();
  server_->run();
}

void AgentDaemon::stop() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  if (server_) server_->stop();
  if (sweeper_.joinable()) sweeper_.join();
}

}  // namespace webagent
