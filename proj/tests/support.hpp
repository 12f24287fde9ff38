#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "webagent/bigint.hpp"
#include "webagent/bytes.hpp"
#include "webagent/random.hpp"

namespace webagent::test {

inline std::filesystem::path fixtures() { return WEBAGENT_TEST_FIXTURES; }

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("missing fixture " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Bytes golden(const std::string& name) { return from_hex(read_text(fixtures() / "golden" / (name + ".hex"))); }

/// Replays a fixed prefix, then repeats `fill_byte`.
class FixedRandom final : public RandomSource {
 public:
  explicit FixedRandom(Bytes prefix = {}, std::uint8_t fill_byte = 0xA5)
      : prefix_(std::move(prefix)), fill_(fill_byte) {}
  void fill(std::span<std::uint8_t> out) override {
    for (auto& b : out) b = pos_ < prefix_.size() ? prefix_[pos_++] : fill_;
  }

 private:
  Bytes prefix_;
  std::uint8_t fill_;
  std::size_t pos_ = 0;
};

/// Small generator for property tests. Sizes skew towards the boundaries.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::uint64_t u64() { return rng_(); }
  std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(rng_() % n); }
  bool coin() { return (rng_() & 1) != 0; }
  std::uint8_t byte() { return static_cast<std::uint8_t>(rng_()); }

  std::size_t size(std::size_t max) {
    switch (below(6)) {
      case 0: return 0;
      case 1: return std::min<std::size_t>(1, max);
      case 2: return max;
      default: return below(max + 1);
    }
  }

  Bytes bytes(std::size_t max) {
    Bytes b(size(max));
    for (auto& x : b) x = byte();
    // High-bit and zero-heavy shapes exercise mpint and string edges.
    if (!b.empty() && below(4) == 0) b[0] = coin() ? 0x00 : 0x80 | byte();
    return b;
  }

  std::string text(std::size_t max) {
    static constexpr std::string_view kAlpha = "abcXYZ019 -_.~/:?&=%+\xc3\xa9";
    std::string s(size(max), ' ');
    for (auto& c : s) c = kAlpha[below(kAlpha.size())];
    return s;
  }

  BigInt bigint(std::size_t max_bytes) { return BigInt::from_bytes(bytes(max_bytes)); }

 private:
  std::mt19937_64 rng_;
};

inline constexpr int kPropertyCases = 1000;

}  // namespace webagent::test
