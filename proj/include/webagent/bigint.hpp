#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <string>

#include "webagent/bytes.hpp"

struct bignum_st;

namespace webagent {

/// Non-negative arbitrary-precision integer with value semantics, backed by
/// an OpenSSL BIGNUM.
class BigInt {
 public:
  BigInt();
  BigInt(std::uint64_t v);  // NOLINT(google-explicit-constructor)
  BigInt(const BigInt& other);
  BigInt(BigInt&&) noexcept = default;
  BigInt& operator=(const BigInt& other);
  BigInt& operator=(BigInt&&) noexcept = default;
  ~BigInt();

  /// Unsigned big-endian magnitude.
  static BigInt from_bytes(ByteView magnitude);
  static BigInt from_hex(const std::string& hex);
  /// Takes ownership.
  static BigInt adopt(bignum_st* bn);

  /// Minimal unsigned big-endian magnitude; empty for zero.
  Bytes to_bytes() const;
  std::string to_hex() const;
  int bit_length() const;
  bool is_zero() const;
  bool is_odd() const;

  BigInt operator+(const BigInt& rhs) const;
  /// Requires *this >= rhs.
  BigInt operator-(const BigInt& rhs) const;
  BigInt operator%(const BigInt& mod) const;
  BigInt mod_exp(const BigInt& exponent, const BigInt& mod) const;
  /// Probabilistic primality test with OpenSSL's default round count.
  bool is_probable_prime() const;

  friend bool operator==(const BigInt& a, const BigInt& b);
  friend std::strong_ordering operator<=>(const BigInt& a, const BigInt& b);

  const bignum_st* get() const { return bn_.get(); }

 private:
  struct Deleter {
    void operator()(bignum_st* bn) const;
  };
  std::unique_ptr<bignum_st, Deleter> bn_;
};

}  // namespace webagent
