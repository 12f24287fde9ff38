#include "webagent/bigint.hpp"

#include <openssl/bn.h>

#include <stdexcept>

namespace webagent {

namespace {

struct CtxDeleter {
  void operator()(BN_CTX* ctx) const { BN_CTX_free(ctx); }
};
using Ctx = std::unique_ptr<BN_CTX, CtxDeleter>;

Ctx make_ctx() {
  Ctx ctx(BN_CTX_new());
  if (!ctx) throw std::bad_alloc();
  return ctx;
}

BIGNUM* checked(BIGNUM* bn) {
  if (bn == nullptr) throw std::bad_alloc();
  return bn;
}

}  // namespace

void BigInt::Deleter::operator()(bignum_st* bn) const { BN_clear_free(bn); }

BigInt::BigInt() : bn_(checked(BN_new())) {}

BigInt::BigInt(std::uint64_t v) : bn_(checked(BN_new())) {
  Bytes be(8);
  for (int i = 7; i >= 0; --i) {
    be[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v & 0xff);
    v >>= 8;
  }
  BN_bin2bn(be.data(), 8, bn_.get());
}

BigInt::BigInt(const BigInt& other) : bn_(checked(BN_dup(other.bn_.get()))) {}

BigInt& BigInt::operator=(const BigInt& other) {
  if (this != &other) bn_.reset(checked(BN_dup(other.bn_.get())));
  return *this;
}

BigInt::~BigInt() = default;

BigInt BigInt::from_bytes(ByteView magnitude) {
  BigInt out;
  BN_bin2bn(magnitude.data(), static_cast<int>(magnitude.size()), out.bn_.get());
  return out;
}

BigInt BigInt::from_hex(const std::string& hex) {
  BIGNUM* bn = nullptr;
  int consumed = BN_hex2bn(&bn, hex.c_str());
  if (consumed == 0 || static_cast<std::size_t>(consumed) != hex.size()) {
    BN_free(bn);
    throw std::invalid_argument("bad hex integer");
  }
  return adopt(bn);
}

BigInt BigInt::adopt(bignum_st* bn) {
  BigInt out;
  out.bn_.reset(checked(bn));
  return out;
}

Bytes BigInt::to_bytes() const {
  Bytes out(static_cast<std::size_t>(BN_num_bytes(bn_.get())));
  BN_bn2bin(bn_.get(), out.data());
  return out;
}

std::string BigInt::to_hex() const {
  char* s = BN_bn2hex(bn_.get());
  std::string out(s);
  OPENSSL_free(s);
  return out;
}

int BigInt::bit_length() const { return BN_num_bits(bn_.get()); }

bool BigInt::is_zero() const { return BN_is_zero(bn_.get()) == 1; }

bool BigInt::is_odd() const { return BN_is_odd(bn_.get()) == 1; }

BigInt BigInt::operator+(const BigInt& rhs) const {
  BigInt out;
  if (BN_add(out.bn_.get(), bn_.get(), rhs.bn_.get()) != 1) throw std::runtime_error("BN_add");
  return out;
}

BigInt BigInt::operator-(const BigInt& rhs) const {
  if (*this < rhs) throw std::domain_error("BigInt subtraction underflow");
  BigInt out;
  if (BN_sub(out.bn_.get(), bn_.get(), rhs.bn_.get()) != 1) throw std::runtime_error("BN_sub");
  return out;
}

BigInt BigInt::operator%(const BigInt& mod) const {
  auto ctx = make_ctx();
  BigInt out;
  if (BN_nnmod(out.bn_.get(), bn_.get(), mod.bn_.get(), ctx.get()) != 1)
    throw std::runtime_error("BN_nnmod");
  return out;
}

BigInt BigInt::mod_exp(const BigInt& exponent, const BigInt& mod) const {
  auto ctx = make_ctx();
  BigInt out;
  if (BN_mod_exp(out.bn_.get(), bn_.get(), exponent.bn_.get(), mod.bn_.get(), ctx.get()) != 1)
    throw std::runtime_error("BN_mod_exp");
  return out;
}

bool BigInt::is_probable_prime() const {
  auto ctx = make_ctx();
  return BN_check_prime(bn_.get(), ctx.get(), nullptr) == 1;
}

bool operator==(const BigInt& a, const BigInt& b) { return BN_cmp(a.bn_.get(), b.bn_.get()) == 0; }

std::strong_ordering operator<=>(const BigInt& a, const BigInt& b) {
  int c = BN_cmp(a.bn_.get(), b.bn_.get());
  if (c < 0) return std::strong_ordering::less;
  if (c > 0) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

}  // namespace webagent
