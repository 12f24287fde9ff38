#pragma once

#include <functional>
#include <mutex>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace webagent {

/// Structured events, one JSON object per line.
class EventLog {
 public:
  using Sink = std::function<void(const nlohmann::json&)>;

  /// Writes to stderr.
  EventLog();
  explicit EventLog(Sink sink) : sink_(std::move(sink)) {}

  static EventLog silent() {
    return EventLog(Sink([](const nlohmann::json&) {}));
  }

  void emit(std::string_view event, nlohmann::json fields = nlohmann::json::object()) const;

 private:
  Sink sink_;
};

/// Thread-safe in-memory sink for tests and the harness.
class CapturedLog {
 public:
  EventLog::Sink sink() {
    return [this](const nlohmann::json& j) {
      std::lock_guard lock(mu_);
      events_.push_back(j);
    };
  }
  std::vector<nlohmann::json> events() const {
    std::lock_guard lock(mu_);
    return events_;
  }
  void clear() {
    std::lock_guard lock(mu_);
    events_.clear();
  }

 private:
  mutable std::mutex mu_;
  std::vector<nlohmann::json> events_;
};

}  // namespace webagent
