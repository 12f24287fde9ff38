#include "webagent/session_manager.hpp"

#include "webagent/error.hpp"

namespace webagent {

SessionState SessionManager::create_session(TrustedServerEntry server, std::string referer,
                                            const crypto::SessionSecrets& secrets, Bytes d, TimePoint now) {
  std::lock_guard lock(mu_);
  if (sessions_.size() >= config_.capacity) sweep_locked(now);
  if (sessions_.size() >= config_.capacity) throw Error(Errc::CapacityExceeded);

  Bytes id;
  do {
    id = rng_.bytes(kSessionIdentifierSize);
  } while (sessions_.contains(id));

  SessionState state{id,        secrets, std::move(server), std::move(referer),
                     std::move(d), now,  now + config_.ttl};
  sessions_.emplace(std::move(id), state);
  return state;
}

std::optional<SessionState> SessionManager::lookup_valid(ByteView identifier, TimePoint now) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(Bytes(identifier.begin(), identifier.end()));
  if (it == sessions_.end()) return std::nullopt;
  if (now >= it->second.expires_at) {
    sessions_.erase(it);
    return std::nullopt;
  }
  return it->second;
}

std::size_t SessionManager::sweep(TimePoint now) {
  std::lock_guard lock(mu_);
  return sweep_locked(now);
}

std::size_t SessionManager::sweep_locked(TimePoint now) {
  return std::erase_if(sessions_, [now](const auto& kv) { return kv.second.expires_at <= now; });
}

std::size_t SessionManager::size() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

}  // namespace webagent
