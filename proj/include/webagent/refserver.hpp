#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "webagent/crypto.hpp"
#include "webagent/error.hpp"
#include "webagent/event_log.hpp"
#include "webagent/http.hpp"
#include "webagent/random.hpp"
#include "webagent/session_manager.hpp"
#include "webagent/ssh_key.hpp"
#include "webagent/wire.hpp"

namespace webagent::refserver {

struct ServerIdentity {
  ssh::PrivateKey key;
  std::vector<std::string> referer_prefixes;
};

/// Server half of an initiated key exchange.
struct PendingKex {
  crypto::DhKeys keys;
  std::string method;
  std::string referer;
  Bytes d;
};

/// Server-side view of an established session.
struct PendingAuth {
  Bytes identifier;
  crypto::SessionSecrets secrets;
  Bytes ssh_session_identifier;
  std::string referer;
  std::string expected_user;
  std::string expected_service;
};

inline constexpr std::size_t kSshSessionIdentifierSize = 32;

/// Signed KEX_DH_REQUEST for `method` and `referer`.
std::pair<wire::Message, PendingKex> make_kex_request(const ServerIdentity& identity, std::string_view method,
                                                      std::string_view referer, Bytes d, const crypto::DhGroup& group,
                                                      RandomSource& rng);

/// Derives the server's secrets and opens E expecting NEW.
/// Errors: DecryptFailure, WrongBodyType, IdentifierMismatch (and
/// OutOfRangePeer for a bad f).
PendingAuth complete_kex(const wire::KexDhResponse& response, const PendingKex& kex, RandomSource& rng,
                         std::string user = {}, std::string service = {});

/// Same secrets complete_kex would derive; exposed for the agreement check.
crypto::SessionSecrets server_secrets(const wire::KexDhResponse& response, const PendingKex& kex);

wire::Message make_auth_request(const PendingAuth& pa, RandomSource& rng);

/// Decrypts a PRIVATE message expecting AUTH_RESPONSE. Errors: WrongBodyType,
/// DecryptFailure, IdentifierMismatch, UnsupportedScheme.
wire::AuthResponsePayload open_auth_response(const wire::Message& message, const PendingAuth& pa);

struct Verdict {
  bool ok = false;
  std::optional<Errc> error;
  std::string reason;
  /// Key that authenticated the user, when ok.
  Bytes authenticated_key;
  /// Decrypted application options.
  std::vector<std::pair<std::string, Bytes>> options;
};

/// ok iff status is true and some signature item verifies over the userauth
/// blob for (ssh session id, user, service) under a key in `authorized`.
/// Option values must decrypt under the server key.
Verdict verify_auth_response(const wire::AuthResponsePayload& response, const PendingAuth& pa,
                             std::string_view user, std::string_view service,
                             const std::vector<Bytes>& authorized, const ssh::PrivateKey& server_key);

/// authorized_keys text: one key per line, either a bare base64 blob or an
/// OpenSSH "type base64 [comment]" line. Blank lines and '#' comments are
/// skipped. Errors: BadBase64Key.
std::vector<Bytes> parse_authorized_keys(std::string_view text);
std::vector<Bytes> load_authorized_keys(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// HTTP surface polled by the page relay:
//   GET  /kex             -> "T=<token>&P=<KEX_DH_REQUEST>"
//   POST /auth-step T&P   -> "SESSION_OK" after the KEX response
//   GET  /auth-step?T=    -> "P=<AUTH_REQUEST>&U=<user>&S=<service>"
//   POST /auth-step T&P   -> "AUTH_OK <user>" or "AUTH_FAIL <reason>"

class RefServerApp {
 public:
  struct Options {
    /// The page URL the browser will send to the agent as Referer.
    std::string referer = "https://webssh.example.com/ssh/";
    std::string method = "POST";
    std::string user = "alice";
    std::string service = "ssh-connection";
    crypto::DhGroup group = crypto::DhGroup::rfc3526_2048();
    Clock::duration pending_ttl = std::chrono::seconds(120);
  };

  RefServerApp(ServerIdentity identity, std::vector<Bytes> authorized, Options options, RandomSource& rng,
               EventLog log = EventLog());

  HttpResponse handle(const HttpRequest& request);

  /// Test hook: the server's view of each established session.
  std::function<void(const PendingAuth&)> on_session_established;
  /// Called with each final verdict.
  std::function<void(const Verdict&)> on_verdict;

  const Options& options() const { return options_; }
  const ServerIdentity& identity() const { return identity_; }

 private:
  struct Flow {
    std::optional<PendingKex> kex;
    std::optional<PendingAuth> auth;
    TimePoint created;
  };

  HttpResponse start_kex();
  HttpResponse step_post(const HttpRequest& request);
  HttpResponse step_get(const HttpRequest& request);
  std::optional<Flow> take(const std::string& token);
  void put(const std::string& token, Flow flow);

  ServerIdentity identity_;
  std::vector<Bytes> authorized_;
  Options options_;
  RandomSource& rng_;
  EventLog log_;
  std::mutex mu_;
  std::map<std::string, Flow> flows_;
};

}  // namespace webagent::refserver
