#pragma once

#include <cstdint>
#include <mutex>
#include <span>

#include "webagent/bytes.hpp"

namespace webagent {

/// Source of private exponents, identifiers, plaintext `random` fields and
/// padding. Implementations must be safe for concurrent use.
class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual void fill(std::span<std::uint8_t> out) = 0;

  Bytes bytes(std::size_t n) {
    Bytes out(n);
    fill(out);
    return out;
  }
};

/// OpenSSL CSPRNG.
class SystemRandom final : public RandomSource {
 public:
  void fill(std::span<std::uint8_t> out) override;
};

RandomSource& system_random();

#ifdef WEBAGENT_TEST_HOOKS
/// Deterministic SHA-256 counter-mode stream for golden transcripts and
/// reproducible tests. Only compiled when WEBAGENT_TEST_HOOKS is defined.
class SeededRandom final : public RandomSource {
 public:
  explicit SeededRandom(std::uint64_t seed);
  void fill(std::span<std::uint8_t> out) override;

 private:
  std::mutex mu_;
  Bytes seed_;
  std::uint64_t counter_ = 0;
  Bytes block_;
  std::size_t used_ = 0;
};
#endif

}  // namespace webagent
