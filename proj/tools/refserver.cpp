// refserver: reference trusted server for ssh-webagent.
//
// With --listen it serves the relay surface (GET /kex, POST /auth-step,
// GET /auth-step). With --agent-url it also plays the page relay itself,
// runs one flow against the agent and prints the verdict.

#include <CLI11.hpp>

#include <pthread.h>

#include <csignal>
#include <iostream>
#include <mutex>

#include "webagent/harness.hpp"
#include "webagent/http_server.hpp"
#include "webagent/refserver.hpp"

namespace {

std::optional<std::pair<std::string, std::uint16_t>> split_host_port(const std::string& s) {
  auto colon = s.rfind(':');
  if (colon == std::string::npos) return std::nullopt;
  try {
    int port = std::stoi(s.substr(colon + 1));
    if (port < 0 || port > 65535) return std::nullopt;
    return std::make_pair(s.substr(0, colon), static_cast<std::uint16_t>(port));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reference trusted server: starts sessions, requests signatures and verifies them"};
  std::string key_path, listen, authorized_path, agent_url;
  webagent::refserver::RefServerApp::Options options;
  bool insecure = false;
  bool quiet = false;

  app.add_option("--key", key_path, "Server private key (PEM or OpenSSH, RSA)")->required();
  app.add_option("--authorized-keys", authorized_path, "Authorized user keys, one per line")->required();
  app.add_option("--listen", listen, "Serve the relay surface on addr:port");
  app.add_option("--agent-url", agent_url, "Run one flow against this agent and print the verdict");
  app.add_option("--referer", options.referer, "Page URL presented to the agent")->capture_default_str();
  app.add_option("--user", options.user, "SSH user name")->capture_default_str();
  app.add_option("--service", options.service, "SSH service name")->capture_default_str();
  app.add_flag("--insecure-tls", insecure, "Accept a self-signed agent certificate");
  app.add_flag("--quiet", quiet, "No structured log on stderr");
  CLI11_PARSE(app, argc, argv);

  if (listen.empty() && agent_url.empty()) {
    std::cerr << "refserver: give --listen, --agent-url or both\n";
    return 2;
  }

  try {
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    auto key = webagent::ssh::PrivateKey::load_file(key_path);
    if (key.type() != webagent::ssh::KeyType::Rsa)
      std::cerr << "refserver: warning: option values need an RSA server key\n";
    webagent::refserver::ServerIdentity identity{std::move(key), {options.referer}};
    auto log = quiet ? webagent::EventLog::silent() : webagent::EventLog();
    webagent::refserver::RefServerApp server(std::move(identity),
                                             webagent::refserver::load_authorized_keys(authorized_path), options,
                                             webagent::system_random(), log);

    std::mutex out_mu;
    server.on_verdict = [&](const webagent::refserver::Verdict& v) {
      std::lock_guard lock(out_mu);
      if (v.ok)
        std::cout << "AUTH_OK " << options.user << std::endl;
      else
        std::cout << "AUTH_FAIL " << (v.error ? std::string(webagent::to_string(*v.error)) + ": " : "") << v.reason
                  << std::endl;
    };

    std::unique_ptr<webagent::HttpServer> http;
    if (!listen.empty()) {
      auto hp = split_host_port(listen);
      if (!hp) {
        std::cerr << "refserver: --listen wants addr:port\n";
        return 2;
      }
      http = std::make_unique<webagent::HttpServer>(
          [&](const webagent::HttpRequest& r) { return server.handle(r); }, webagent::HttpServer::Options{});
      auto port = http->bind(hp->first, hp->second);
      log.emit("listening", {{"address", hp->first}, {"port", port}});
      http->start();
    }

    int status = 0;
    if (!agent_url.empty()) {
      webagent::harness::InProcessEndpoint self([&](const webagent::HttpRequest& r) { return server.handle(r); });
      webagent::ClientOptions client;
      client.insecure_tls = insecure;
      webagent::harness::RemoteEndpoint agent(agent_url, client);
      auto report = webagent::harness::run_relay(self, agent, webagent::harness::RelayConfig{options.referer});
      if (!report.ok && report.verdict.empty()) {
        std::lock_guard lock(out_mu);
        std::cout << "AUTH_FAIL " << report.failure_reason.value_or("unknown") << std::endl;
      }
      status = report.ok ? 0 : 1;
    }

    if (http) {
      int received = 0;
      sigwait(&signals, &received);
      http->stop();
    }
    return status;
  } catch (const std::exception& e) {
    std::cerr << "refserver: " << e.what() << '\n';
    return 1;
  }
}
