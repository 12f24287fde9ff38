#include "webagent/crypto.hpp"

#include <openssl/bn.h>
#include <openssl/evp.h>
#include <openssl/rsa.h>

#include <algorithm>
#include <memory>

#include "webagent/error.hpp"

namespace webagent::crypto {

namespace {

struct CipherCtxFree {
  void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};
struct PkeyCtxFree {
  void operator()(EVP_PKEY_CTX* c) const { EVP_PKEY_CTX_free(c); }
};

constexpr int kMaxDhAttempts = 8;
constexpr std::size_t kExponentBytes = 64;

template <std::size_t N>
void copy_prefix(const Bytes& from, std::array<std::uint8_t, N>& to) {
  std::copy_n(from.begin(), N, to.begin());
}

Bytes aes_256_cbc(bool encrypt, const SessionSecrets& s, ByteView in) {
  std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree> ctx(EVP_CIPHER_CTX_new());
  if (!ctx) throw Error(Errc::CryptoFailure, "cipher ctx");
  if (EVP_CipherInit_ex(ctx.get(), EVP_aes_256_cbc(), nullptr, s.secret_key.data(), s.iv.data(),
                        encrypt ? 1 : 0) != 1)
    throw Error(Errc::CryptoFailure, "cipher init");
  EVP_CIPHER_CTX_set_padding(ctx.get(), 0);
  Bytes out(in.size() + wire::kAesBlockSize);
  int len = 0;
  int total = 0;
  if (EVP_CipherUpdate(ctx.get(), out.data(), &len, in.data(), static_cast<int>(in.size())) != 1)
    throw Error(Errc::CryptoFailure, "cipher update");
  total = len;
  if (EVP_CipherFinal_ex(ctx.get(), out.data() + total, &len) != 1)
    throw Error(Errc::CryptoFailure, "cipher final");
  total += len;
  out.resize(static_cast<std::size_t>(total));
  return out;
}

void check_algorithm(std::uint8_t algorithm) {
  if (algorithm != static_cast<std::uint8_t>(wire::Algorithm::Aes256Cbc))
    throw Error(Errc::UnsupportedAlgorithm);
}

void check_scheme(std::uint8_t es) {
  if (es != static_cast<std::uint8_t>(wire::EncryptionScheme::Pkcs1RsaesOaep))
    throw Error(Errc::UnsupportedScheme);
}

void configure_oaep(EVP_PKEY_CTX* ctx) {
  if (EVP_PKEY_CTX_set_rsa_padding(ctx, RSA_PKCS1_OAEP_PADDING) != 1 ||
      EVP_PKEY_CTX_set_rsa_oaep_md(ctx, EVP_sha1()) != 1 ||
      EVP_PKEY_CTX_set_rsa_mgf1_md(ctx, EVP_sha1()) != 1)
    throw Error(Errc::CryptoFailure, "oaep parameters");
}

}  // namespace

Bytes sha256(ByteView data) {
  Bytes out(32);
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error(Errc::CryptoFailure, "sha256");
  return out;
}

// ---------------------------------------------------------------------------
// Diffie-Hellman

DhGroup DhGroup::rfc3526_1536() { return {BigInt::adopt(BN_get_rfc3526_prime_1536(nullptr)), BigInt(2)}; }
DhGroup DhGroup::rfc3526_2048() { return {BigInt::adopt(BN_get_rfc3526_prime_2048(nullptr)), BigInt(2)}; }
DhGroup DhGroup::rfc3526_3072() { return {BigInt::adopt(BN_get_rfc3526_prime_3072(nullptr)), BigInt(2)}; }
DhGroup DhGroup::rfc3526_4096() { return {BigInt::adopt(BN_get_rfc3526_prime_4096(nullptr)), BigInt(2)}; }

DhPolicy DhPolicy::permissive() {
  DhPolicy p;
  p.min_prime_bits = 0;
  p.generators.clear();
  p.known_groups.clear();
  p.check_primality = false;
  return p;
}

void validate_group(const BigInt& p, const BigInt& g, const DhPolicy& policy) {
  for (const auto& known : policy.known_groups)
    if (known.p == p && known.g == g) return;
  if (!p.is_odd() || p < BigInt(5)) throw Error(Errc::WeakParameters, "modulus");
  if (g < BigInt(2) || g >= p - BigInt(1)) throw Error(Errc::WeakParameters, "generator range");
  if (p.bit_length() < policy.min_prime_bits) throw Error(Errc::WeakParameters, "modulus too small");
  if (!policy.generators.empty() &&
      std::find(policy.generators.begin(), policy.generators.end(), g) == policy.generators.end())
    throw Error(Errc::WeakParameters, "generator not allowed");
  if (policy.check_primality && !p.is_probable_prime()) throw Error(Errc::WeakParameters, "composite modulus");
}

DhKeys dh_generate(const BigInt& p, const BigInt& g, RandomSource& rng, const DhPolicy& policy) {
  validate_group(p, g, policy);
  const BigInt p_minus_1 = p - BigInt(1);
  for (int attempt = 0; attempt < kMaxDhAttempts; ++attempt) {
    BigInt x = BigInt::from_bytes(rng.bytes(kExponentBytes));
    // Small (toy) moduli: bring the exponent into [2, p-2].
    if (p.bit_length() <= static_cast<int>(kExponentBytes * 8)) x = x % (p - BigInt(3)) + BigInt(2);
    if (x < BigInt(2)) continue;
    BigInt y = g.mod_exp(x, p);
    if (y > BigInt(1) && y < p_minus_1) return DhKeys{p, g, std::move(x), std::move(y)};
  }
  throw Error(Errc::DegenerateValue);
}

#ifdef WEBAGENT_TEST_HOOKS
namespace testing {
DhKeys dh_keys_with_exponent(const BigInt& p, const BigInt& g, const BigInt& exponent) {
  return DhKeys{p, g, exponent, g.mod_exp(exponent, p)};
}
}  // namespace testing
#endif

BigInt dh_shared(const BigInt& peer_public, const DhKeys& keys) {
  if (peer_public <= BigInt(1) || peer_public >= keys.p - BigInt(1)) throw Error(Errc::OutOfRangePeer);
  return peer_public.mod_exp(keys.private_exponent, keys.p);
}

// ---------------------------------------------------------------------------
// KEX signature

Bytes kex_sign_bytes(const BigInt& p, const BigInt& g, const BigInt& e, std::string_view method,
                     std::string_view referer, ByteView k, ByteView d) {
  wire::Writer w;
  w.mpint(p).mpint(g).mpint(e).string(method).string(referer).string(k).string(d);
  return std::move(w).take();
}

bool verify_kex_signature(const wire::KexDhRequest& req, std::string_view method,
                          std::string_view referer) {
  auto key = ssh::PublicKey::from_blob(req.k);
  return key.verify(kex_sign_bytes(req.p, req.g, req.e, method, referer, req.k, req.d), req.sign);
}

void sign_kex_request(wire::KexDhRequest& req, std::string_view method, std::string_view referer,
                      const ssh::PrivateKey& server_key, std::string_view algorithm) {
  if (algorithm.empty()) algorithm = server_key.default_signature_algorithm();
  req.k = server_key.public_key().blob();
  req.sign = server_key.sign(kex_sign_bytes(req.p, req.g, req.e, method, referer, req.k, req.d), algorithm);
}

// ---------------------------------------------------------------------------
// Secrets

SessionSecrets derive_secrets(std::string_view method, std::string_view referer, const BigInt& e,
                              const BigInt& f, const BigInt& shared_value) {
  if (shared_value.is_zero()) throw Error(Errc::DegenerateValue, "shared value");
  SessionSecrets s;
  s.shared_value = shared_value;

  wire::Writer h1;
  h1.string(method).string(referer).mpint(e).mpint(f).mpint(shared_value);
  copy_prefix(sha256(h1.bytes()), s.shared_secret);

  auto key_material = [&](std::uint8_t letter) {
    wire::Writer h;
    h.mpint(shared_value).string(ByteView(s.shared_secret)).byte(letter).string(referer);
    return sha256(h.bytes());
  };
  copy_prefix(key_material('A'), s.secret_key);
  copy_prefix(key_material('B'), s.iv);
  return s;
}

// ---------------------------------------------------------------------------
// Body encryption

wire::Plaintext make_plaintext(ByteView identifier, wire::Payload payload, RandomSource& rng) {
  wire::Plaintext p;
  rng.fill(p.random);
  p.identifier.assign(identifier.begin(), identifier.end());
  p.payload = std::move(payload);
  return p;
}

wire::MessageBody body_encrypt(const wire::Plaintext& p, const SessionSecrets& secrets,
                               std::uint8_t algorithm, RandomSource& rng) {
  check_algorithm(algorithm);
  Bytes plain = wire::plaintext_encode(p, wire::kAesBlockSize, rng);
  wire::MessageBody mb;
  mb.algorithm = algorithm;
  mb.identifier = p.identifier;
  mb.ciphertext = aes_256_cbc(true, secrets, plain);
  return mb;
}

wire::Plaintext body_decrypt(const wire::MessageBody& mb, const SessionSecrets& secrets,
                             std::initializer_list<wire::BodyType> expected_types) {
  check_algorithm(mb.algorithm);
  if (mb.ciphertext.empty() || mb.ciphertext.size() % wire::kAesBlockSize != 0)
    throw Error(Errc::BlockAlignment);
  Bytes plain = aes_256_cbc(false, secrets, mb.ciphertext);
  wire::Plaintext p = wire::plaintext_decode(plain, expected_types);
  if (!constant_time_equal(p.identifier, mb.identifier)) throw Error(Errc::IdentifierMismatch);
  return p;
}

// ---------------------------------------------------------------------------
// OAEP options

std::size_t oaep_capacity(std::size_t modulus_bytes) {
  constexpr std::size_t kSha1Len = 20;
  return modulus_bytes > 2 * kSha1Len + 2 ? modulus_bytes - 2 * kSha1Len - 2 : 0;
}

Bytes option_encrypt(ByteView value, const ssh::PublicKey& server_key, std::uint8_t es) {
  check_scheme(es);
  if (server_key.type() != ssh::KeyType::Rsa) throw Error(Errc::NonRsaKey);
  auto modulus_bytes = static_cast<std::size_t>(EVP_PKEY_get_size(server_key.native()));
  if (value.size() > oaep_capacity(modulus_bytes)) throw Error(Errc::ValueTooLong);

  std::unique_ptr<EVP_PKEY_CTX, PkeyCtxFree> ctx(EVP_PKEY_CTX_new(server_key.native(), nullptr));
  if (!ctx || EVP_PKEY_encrypt_init(ctx.get()) != 1) throw Error(Errc::CryptoFailure, "oaep init");
  configure_oaep(ctx.get());
  std::size_t len = 0;
  if (EVP_PKEY_encrypt(ctx.get(), nullptr, &len, value.data(), value.size()) != 1)
    throw Error(Errc::CryptoFailure, "oaep size");
  Bytes out(len);
  if (EVP_PKEY_encrypt(ctx.get(), out.data(), &len, value.data(), value.size()) != 1)
    throw Error(Errc::CryptoFailure, "oaep encrypt");
  out.resize(len);
  return out;
}

Bytes option_decrypt(ByteView ciphertext, const ssh::PrivateKey& server_key, std::uint8_t es) {
  check_scheme(es);
  if (server_key.type() != ssh::KeyType::Rsa) throw Error(Errc::NonRsaKey);
  std::unique_ptr<EVP_PKEY_CTX, PkeyCtxFree> ctx(EVP_PKEY_CTX_new(server_key.native(), nullptr));
  if (!ctx || EVP_PKEY_decrypt_init(ctx.get()) != 1) throw Error(Errc::CryptoFailure, "oaep init");
  configure_oaep(ctx.get());
  std::size_t len = 0;
  if (EVP_PKEY_decrypt(ctx.get(), nullptr, &len, ciphertext.data(), ciphertext.size()) != 1)
    throw Error(Errc::DecryptFailure);
  Bytes out(len);
  if (EVP_PKEY_decrypt(ctx.get(), out.data(), &len, ciphertext.data(), ciphertext.size()) != 1)
    throw Error(Errc::DecryptFailure);
  out.resize(len);
  return out;
}

}  // namespace webagent::crypto
