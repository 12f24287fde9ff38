#include "webagent/event_log.hpp"

#include <chrono>
#include <iostream>

namespace webagent {

EventLog::EventLog()
    : sink_([](const nlohmann::json& j) {
        static std::mutex mu;
        std::lock_guard lock(mu);
        std::cerr << j.dump() << '\n';
      }) {}

void EventLog::emit(std::string_view event, nlohmann::json fields) const {
  if (!sink_) return;
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::system_clock::now().time_since_epoch())
                .count();
  fields["event"] = event;
  fields["ts_ms"] = ms;
  sink_(fields);
}

}  // namespace webagent
