#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "webagent/http.hpp"
#include "webagent/owner_guard.hpp"

namespace webagent {

/// Thin wrapper over cpp-httplib that speaks HttpRequest/HttpResponse.
class HttpServer {
 public:
  using Handler = std::function<HttpResponse(const HttpRequest&)>;
  /// Runs before the request body is read. Returning a response ends the
  /// exchange with it.
  using Gate = std::function<std::optional<HttpResponse>(const SocketAddress& peer, const SocketAddress& local)>;

  struct Options {
    std::optional<std::filesystem::path> tls_cert;
    std::optional<std::filesystem::path> tls_key;
    std::size_t payload_max_length = 8u << 20;
  };

  HttpServer(Handler handler, Options options, Gate gate = {});
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds without accepting yet. Port 0 picks an ephemeral port; the bound
  /// port is returned. Throws std::runtime_error on failure.
  std::uint16_t bind(const std::string& host, std::uint16_t port);

  /// Accept loop on a background thread / on the calling thread.
  void start();
  void run();
  void stop();

  std::uint16_t port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::uint16_t port_ = 0;
};

struct ClientOptions {
  std::chrono::milliseconds timeout{10000};
  /// Skip certificate verification for self-signed agent certificates.
  bool insecure_tls = false;
};

/// One request against `base_url` ("http://host:port" or "https://...").
/// Throws Error{Io} on connection failure.
HttpResponse http_fetch(const std::string& base_url, const HttpRequest& request, const ClientOptions& options = {});

}  // namespace webagent
