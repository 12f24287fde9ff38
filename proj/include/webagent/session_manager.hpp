#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "webagent/bytes.hpp"
#include "webagent/crypto.hpp"
#include "webagent/random.hpp"
#include "webagent/trust_store.hpp"

namespace webagent {

using Clock = std::chrono::steady_clock;
using TimePoint = Clock::time_point;

inline constexpr std::size_t kSessionIdentifierSize = 16;

struct SessionState {
  Bytes identifier;
  crypto::SessionSecrets secrets;
  TrustedServerEntry server;
  std::string referer;
  Bytes session_data_d;
  TimePoint created_at;
  TimePoint expires_at;
};

struct SessionConfig {
  Clock::duration ttl = std::chrono::seconds(120);
  std::size_t capacity = 64;
};

/// Live sessions keyed by identifier. Every operation takes the table lock,
/// so calls are linearizable across request handlers. Expiry is exclusive:
/// a session is dead at now >= expires_at.
class SessionManager {
 public:
  SessionManager(SessionConfig config, RandomSource& rng) : config_(config), rng_(rng) {}

  /// Errors: CapacityExceeded once `capacity` live sessions exist (expired
  /// ones are swept first).
  SessionState create_session(TrustedServerEntry server, std::string referer,
                              const crypto::SessionSecrets& secrets, Bytes d, TimePoint now);

  /// Returns the session iff it exists and now < expires_at; an expired
  /// entry is destroyed.
  std::optional<SessionState> lookup_valid(ByteView identifier, TimePoint now);

  /// Removes every session with expires_at <= now and returns the count.
  std::size_t sweep(TimePoint now);

  std::size_t size() const;
  const SessionConfig& config() const { return config_; }

 private:
  std::size_t sweep_locked(TimePoint now);

  SessionConfig config_;
  RandomSource& rng_;
  mutable std::mutex mu_;
  std::map<Bytes, SessionState> sessions_;
};

}  // namespace webagent
