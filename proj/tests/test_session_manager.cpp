#include <gtest/gtest.h>

#include <set>
#include <thread>

#include "support.hpp"
#include "webagent/error.hpp"
#include "webagent/session_manager.hpp"

using namespace webagent;
using namespace std::chrono_literals;

namespace {

SessionState make(SessionManager& m, TimePoint now) {
  return m.create_session({Bytes{1, 2}, {"https://a/"}}, "https://a/x", {}, Bytes{9}, now);
}

}  // namespace

TEST(Sessions, CreateAndLookup) {
  SessionManager m({120s, 64}, system_random());
  auto t0 = Clock::now();
  auto a = make(m, t0);
  auto b = make(m, t0);
  EXPECT_EQ(a.identifier.size(), kSessionIdentifierSize);
  EXPECT_NE(a.identifier, b.identifier);
  EXPECT_EQ(a.expires_at - a.created_at, Clock::duration(120s));
  ASSERT_TRUE(m.lookup_valid(a.identifier, t0));
  EXPECT_EQ(m.lookup_valid(a.identifier, t0)->referer, "https://a/x");
  EXPECT_TRUE(m.lookup_valid(a.identifier, t0 + 1s));
  EXPECT_FALSE(m.lookup_valid(Bytes(16, 0), t0));
}

TEST(Sessions, ExpiryIsExclusive) {
  SessionManager m({120s, 64}, system_random());
  auto t0 = Clock::now();
  auto a = make(m, t0);
  EXPECT_TRUE(m.lookup_valid(a.identifier, t0 + 120s - 1ns));
  EXPECT_FALSE(m.lookup_valid(a.identifier, t0 + 120s));
  EXPECT_EQ(m.size(), 0u);
  // Destroyed, so an earlier clock does not revive it.
  EXPECT_FALSE(m.lookup_valid(a.identifier, t0));
}

TEST(Sessions, Sweep) {
  SessionManager m({10s, 64}, system_random());
  auto t0 = Clock::now();
  EXPECT_EQ(m.sweep(t0), 0u);
  make(m, t0);
  make(m, t0);
  auto live = make(m, t0 + 5s);
  EXPECT_EQ(m.sweep(t0 + 10s), 2u);
  EXPECT_EQ(m.sweep(t0 + 10s), 0u);
  EXPECT_TRUE(m.lookup_valid(live.identifier, t0 + 10s));
  EXPECT_EQ(m.size(), 1u);
}

TEST(Sessions, Capacity) {
  SessionManager m({10s, 3}, system_random());
  auto t0 = Clock::now();
  for (int i = 0; i < 3; ++i) make(m, t0);
  try {
    make(m, t0);
    FAIL() << "expected CapacityExceeded";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::CapacityExceeded);
  }
  // Expired sessions free their slots.
  EXPECT_NO_THROW(make(m, t0 + 10s));
}

// Random operation sequences against a reference model.
TEST(Sessions, ModelProperty) {
  test::Gen g(51);
  for (int round = 0; round < test::kPropertyCases; ++round) {
    std::size_t cap = 1 + g.below(6);
    auto ttl = std::chrono::milliseconds(1 + g.below(50));
    SessionManager m({ttl, cap}, system_random());
    std::map<Bytes, TimePoint> model;
    auto now = TimePoint{} + 1h;
    for (int step = 0; step < 20; ++step) {
      now += std::chrono::milliseconds(g.below(20));
      switch (g.below(3)) {
        case 0: {
          auto live = std::count_if(model.begin(), model.end(), [&](const auto& kv) { return kv.second > now; });
          if (static_cast<std::size_t>(live) >= cap) {
            ASSERT_THROW(make(m, now), Error);
          } else {
            auto s = make(m, now);
            ASSERT_FALSE(model.contains(s.identifier));
            model[s.identifier] = s.expires_at;
          }
          break;
        }
        case 1: {
          if (model.empty()) break;
          auto it = std::next(model.begin(), static_cast<long>(g.below(model.size())));
          bool alive = now < it->second;
          auto found = m.lookup_valid(it->first, now);
          ASSERT_EQ(found.has_value(), alive);
          if (found) ASSERT_GT(found->expires_at, now);
          if (!alive) model.erase(it);
          break;
        }
        default: {
          // Creation may already have swept some of these.
          std::size_t dead = std::erase_if(model, [&](const auto& kv) { return kv.second <= now; });
          ASSERT_LE(m.sweep(now), dead);
          ASSERT_EQ(m.size(), model.size());
        }
      }
      ASSERT_LE(m.size(), cap);
    }
  }
}

TEST(Sessions, ConcurrentCreatesStayUnique) {
  SessionManager m({60s, 8 * 200}, system_random());
  auto t0 = Clock::now();
  std::vector<std::thread> threads;
  std::mutex mu;
  std::set<Bytes> ids;
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&] {
      for (int i = 0; i < 200; ++i) {
        auto s = make(m, t0);
        std::lock_guard lock(mu);
        ids.insert(s.identifier);
      }
    });
  for (auto& t : threads) t.join();
  EXPECT_EQ(ids.size(), 1600u);
  EXPECT_EQ(m.size(), 1600u);
}
