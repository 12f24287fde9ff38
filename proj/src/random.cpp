#include "webagent/random.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <stdexcept>

namespace webagent {

void SystemRandom::fill(std::span<std::uint8_t> out) {
  if (out.empty()) return;
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1)
    throw std::runtime_error("RAND_bytes failed");
}

RandomSource& system_random() {
  static SystemRandom instance;
  return instance;
}

#ifdef WEBAGENT_TEST_HOOKS

SeededRandom::SeededRandom(std::uint64_t seed) : seed_(8) {
  for (int i = 7; i >= 0; --i) {
    seed_[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(seed & 0xff);
    seed >>= 8;
  }
}

void SeededRandom::fill(std::span<std::uint8_t> out) {
  std::lock_guard lock(mu_);
  for (auto& b : out) {
    if (used_ == block_.size()) {
      // block = SHA-256(seed || counter)
      Bytes input = seed_;
      for (int i = 7; i >= 0; --i) input.push_back(static_cast<std::uint8_t>(counter_ >> (8 * i)));
      ++counter_;
      block_.assign(32, 0);
      unsigned int len = 0;
      EVP_Digest(input.data(), input.size(), block_.data(), &len, EVP_sha256(), nullptr);
      used_ = 0;
    }
    b = block_[used_++];
  }
}

#endif

}  // namespace webagent
