// ssh-webagent: signs SSH userauth requests for trusted web pages.

#include <CLI11.hpp>

#include <pthread.h>

#include <csignal>
#include <iostream>

#include "webagent/agent_daemon.hpp"
#include "webagent/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Local HTTP agent that signs SSH publickey userauth requests for trusted web servers"};
  webagent::AgentConfig config;
  std::string trusted = config.trusted_servers_path.string();
  std::vector<std::string> keys;
  std::string tls_cert, tls_key;
  int ttl = static_cast<int>(config.session_ttl.count());
  std::string owner_policy{webagent::to_string(config.owner_policy)};
  int port = config.port;

  app.set_config("--config", "", "Config file (TOML/INI keys mirror the long flags)")
      ->envname("SSH_WEBAGENT_CONFIG");
  app.add_option("--bind", config.bind_address, "Loopback address to listen on")->capture_default_str();
  app.add_option("--port", port, "TCP port")->check(CLI::Range(1, 65535))->capture_default_str();
  app.add_option("--trusted-servers", trusted, "Trusted servers file")->capture_default_str();
  app.add_option("--key", keys, "Private key file or directory (repeatable)")->required();
  app.add_option("--ttl", ttl, "Session lifetime in seconds")->check(CLI::NonNegativeNumber)->capture_default_str();
  app.add_option("--capacity", config.session_capacity, "Maximum live sessions")->capture_default_str();
  app.add_option("--owner-policy", owner_policy, "Connection owner check")
      ->check(CLI::IsMember({"enforce", "warn", "off"}))
      ->capture_default_str();
  app.add_option("--tls-cert", tls_cert, "PEM certificate for HTTPS");
  app.add_option("--tls-key", tls_key, "PEM private key for HTTPS");
  app.add_flag("--strict-permissions", config.strict_permissions,
               "Refuse key files readable by group/other and trust files writable by them");
  CLI11_PARSE(app, argc, argv);

  config.port = static_cast<std::uint16_t>(port);
  config.trusted_servers_path = trusted;
  for (const auto& k : keys) config.key_paths.emplace_back(k);
  config.session_ttl = std::chrono::seconds(ttl);
  config.owner_policy = *webagent::parse_owner_policy(owner_policy);
  if (!tls_cert.empty()) config.tls_cert = tls_cert;
  if (!tls_key.empty()) config.tls_key = tls_key;

  try {
    // Worker threads inherit the blocked mask; the main thread waits for the signal.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    webagent::AgentDaemon daemon(config);
    daemon.start();
    int received = 0;
    sigwait(&signals, &received);
    daemon.stop();
  } catch (const std::exception& e) {
    std::cerr << "ssh-webagent: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
