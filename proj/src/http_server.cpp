#include "webagent/http_server.hpp"

#include <httplib.h>

#include <stdexcept>
#include <thread>

#include "webagent/error.hpp"
#include "webagent/wire.hpp"

namespace webagent {

namespace {

bool is_injected_header(const std::string& name) {
  return name == "REMOTE_ADDR" || name == "REMOTE_PORT" || name == "LOCAL_ADDR" || name == "LOCAL_PORT";
}

HttpRequest convert(const httplib::Request& in) {
  HttpRequest out;
  out.method = in.method;
  out.path = in.path;
  for (const auto& [k, v] : in.params) {
    if (!out.query.empty()) out.query += '&';
    out.query += wire::form_escape(k) + "=" + wire::form_escape(v);
  }
  for (const auto& [k, v] : in.headers)
    if (!is_injected_header(k)) out.headers.emplace_back(k, v);
  out.body = in.body;
  return out;
}

void apply(const HttpResponse& in, httplib::Response& out) {
  out.status = in.status;
  for (const auto& [k, v] : in.headers) out.set_header(k, v);
  out.set_content(in.body, in.content_type);
}

}  // namespace

struct HttpServer::Impl {
  std::unique_ptr<httplib::Server> server;
  std::thread thread;
};

HttpServer::HttpServer(Handler handler, Options options, Gate gate) : impl_(std::make_unique<Impl>()) {
  if (options.tls_cert) {
    auto ssl = std::make_unique<httplib::SSLServer>(options.tls_cert->c_str(), options.tls_key->c_str());
    if (!ssl->is_valid()) throw std::runtime_error("cannot load TLS certificate or key");
    impl_->server = std::move(ssl);
  } else {
    impl_->server = std::make_unique<httplib::Server>();
  }
  auto& srv = *impl_->server;
  srv.set_payload_max_length(options.payload_max_length);

  if (gate) {
    srv.set_pre_routing_handler([gate](const httplib::Request& req, httplib::Response& res) {
      auto peer = SocketAddress::parse(req.remote_addr, static_cast<std::uint16_t>(req.remote_port));
      auto local = SocketAddress::parse(req.local_addr, static_cast<std::uint16_t>(req.local_port));
      std::optional<HttpResponse> verdict;
      if (!peer || !local) {
        verdict = HttpResponse{403, "text/plain", {}, "forbidden"};
      } else {
        verdict = gate(*peer, *local);
      }
      if (!verdict) return httplib::Server::HandlerResponse::Unhandled;
      apply(*verdict, res);
      return httplib::Server::HandlerResponse::Handled;
    });
  }

  auto route = [handler](const httplib::Request& req, httplib::Response& res) { apply(handler(convert(req)), res); };
  srv.Get(".*", route);
  srv.Post(".*", route);
  srv.Put(".*", route);
  srv.Delete(".*", route);
  srv.Patch(".*", route);
  srv.Options(".*", route);
}

HttpServer::~HttpServer() { stop(); }

std::uint16_t HttpServer::bind(const std::string& host, std::uint16_t port) {
  auto& srv = *impl_->server;
  if (port == 0) {
    int p = srv.bind_to_any_port(host);
    if (p <= 0) throw std::runtime_error("cannot bind " + host);
    port_ = static_cast<std::uint16_t>(p);
  } else {
    if (!srv.bind_to_port(host, port)) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    port_ = port;
  }
  return port_;
}

void HttpServer::start() {
  impl_->thread = std::thread([this] { impl_->server->listen_after_bind(); });
  impl_->server->wait_until_ready();
}

void HttpServer::run() { impl_->server->listen_after_bind(); }

void HttpServer::stop() {
  if (!impl_ || !impl_->server) return;
  impl_->server->stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

HttpResponse http_fetch(const std::string& base_url, const HttpRequest& request, const ClientOptions& options) {
  httplib::Client cli(base_url);
  cli.set_connection_timeout(options.timeout);
  cli.set_read_timeout(options.timeout);
  cli.set_write_timeout(options.timeout);
  if (options.insecure_tls) cli.enable_server_certificate_verification(false);

  httplib::Request req;
  req.method = request.method;
  req.path = request.path + (request.query.empty() ? "" : "?" + request.query);
  for (const auto& [k, v] : request.headers) req.set_header(k, v);
  req.body = request.body;

  auto result = cli.send(req);
  if (!result) throw Error(Errc::Io, base_url + ": " + httplib::to_string(result.error()));

  HttpResponse out;
  out.status = result->status;
  out.body = result->body;
  for (const auto& [k, v] : result->headers) out.headers.emplace_back(k, v);
  if (auto ct = out.header("Content-Type")) out.content_type = *ct;
  return out;
}

}  // namespace webagent
