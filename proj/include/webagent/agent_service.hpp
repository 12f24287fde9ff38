#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "webagent/crypto.hpp"
#include "webagent/error.hpp"
#include "webagent/event_log.hpp"
#include "webagent/http.hpp"
#include "webagent/owner_guard.hpp"
#include "webagent/random.hpp"
#include "webagent/session_manager.hpp"
#include "webagent/ssh_key.hpp"
#include "webagent/trust_store.hpp"
#include "webagent/wire.hpp"

namespace webagent {

inline constexpr std::string_view kDefaultBindAddress = "127.82.11.29";
inline constexpr std::uint16_t kDefaultPort = 8211;

struct AgentConfig {
  std::string bind_address{kDefaultBindAddress};
  std::uint16_t port = kDefaultPort;
  std::optional<std::filesystem::path> tls_cert;
  std::optional<std::filesystem::path> tls_key;
  std::filesystem::path trusted_servers_path = default_trusted_servers_path();
  std::vector<std::filesystem::path> key_paths;
  std::chrono::seconds session_ttl{120};
  std::size_t session_capacity = 64;
  OwnerPolicy owner_policy = OwnerPolicy::Warn;
  /// Refuse group/other-accessible key files and group/other-writable trust files.
  bool strict_permissions = false;
};

/// Throws std::invalid_argument unless bind_address is in 127.0.0.0/8 and
/// port is non-zero. Tests that want an ephemeral port pass
/// allow_ephemeral_port.
void validate(const AgentConfig& config, bool allow_ephemeral_port = false);

class KeyRing {
 public:
  KeyRing() = default;
  explicit KeyRing(std::vector<ssh::PrivateKey> keys) : keys_(std::move(keys)) {}

  const std::vector<ssh::PrivateKey>& keys() const { return keys_; }
  bool empty() const { return keys_.empty(); }
  std::size_t size() const { return keys_.size(); }

 private:
  std::vector<ssh::PrivateKey> keys_;
};

struct KeyLoadOptions {
  bool strict_permissions = false;
};

/// Each path is a key file or a directory of key files (`*.pub` skipped).
/// Unreadable, unparseable or (under strict) group/other-accessible files are
/// reported through `warn` and skipped. Errors: NoKeysLoaded.
KeyRing load_keyring(const std::vector<std::filesystem::path>& paths, const KeyLoadOptions& options = {},
                     const std::function<void(const std::string&)>& warn = {});

/// The agent's request handler: owner checks happen in the transport layer
/// before a request reaches handle().
class AgentService {
 public:
  struct Options {
    SessionConfig sessions;
    crypto::DhPolicy dh_policy;
    /// Application-defined options attached to every AUTH_RESPONSE; values
    /// are OAEP-encrypted to the session's trusted server key.
    std::vector<std::pair<std::string, Bytes>> response_options;
  };

  AgentService(std::shared_ptr<const TrustStore> trust, KeyRing keys, Options options, RandomSource& rng,
               EventLog log = EventLog());

  HttpResponse handle(const HttpRequest& request, TimePoint now);
  HttpResponse handle(const HttpRequest& request) { return handle(request, Clock::now()); }

  /// KEX_DH_REQUEST; throws Error (UntrustedServer, BadSignature,
  /// WeakParameters, MalformedKeyBlob, MalformedSignatureBlob, OutOfRangePeer,
  /// CapacityExceeded).
  wire::Message handle_kex(const wire::KexDhRequest& request, std::string_view method,
                           std::string_view referer, TimePoint now);

  /// PRIVATE carrying AUTH_REQUEST; throws Error (MissingUserOrService,
  /// UnknownSession, RefererMismatch, IdentifierMismatch, UnexpectedBodyType,
  /// plaintext decode errors).
  wire::Message handle_private(const wire::MessageBody& body, const wire::FormRequest& form,
                               std::string_view referer, TimePoint now);

  SessionManager& sessions() { return sessions_; }
  const KeyRing& keys() const { return keys_; }

  /// Expiry sweep, logged when it destroys anything.
  std::size_t sweep(TimePoint now);

  /// Called after each session is created. Tests use it to compare secrets
  /// with the server side.
  std::function<void(const SessionState&)> on_session_created;

 private:
  std::optional<std::string> cors_origin(const HttpRequest& request) const;
  HttpResponse respond(int status, std::string body, const std::optional<std::string>& origin) const;

  std::shared_ptr<const TrustStore> trust_;
  KeyRing keys_;
  Options options_;
  RandomSource& rng_;
  EventLog log_;
  SessionManager sessions_;
};

/// HTTP status the agent uses for a given failure class.
int http_status_for(Errc code);

}  // namespace webagent
