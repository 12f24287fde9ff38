#pragma once

#include <array>
#include <initializer_list>
#include <string_view>
#include <vector>

#include "webagent/bigint.hpp"
#include "webagent/bytes.hpp"
#include "webagent/random.hpp"
#include "webagent/ssh_key.hpp"
#include "webagent/wire.hpp"

namespace webagent::crypto {

Bytes sha256(ByteView data);

// ---------------------------------------------------------------------------
// Diffie-Hellman

struct DhGroup {
  BigInt p;
  BigInt g;

  static DhGroup rfc3526_1536();  // group 5, below the default size floor
  static DhGroup rfc3526_2048();  // group 14
  static DhGroup rfc3526_3072();  // group 15
  static DhGroup rfc3526_4096();  // group 16
};

/// Which server-chosen groups the agent accepts. Groups that match an entry
/// of `known_groups` exactly are always accepted; any other group must have a
/// prime of at least `min_prime_bits` bits, a generator from `generators`,
/// and (when `check_primality`) pass a probabilistic primality test.
struct DhPolicy {
  int min_prime_bits = 2048;
  std::vector<BigInt> generators{BigInt(2), BigInt(5)};
  std::vector<DhGroup> known_groups{DhGroup::rfc3526_2048(), DhGroup::rfc3526_3072(),
                                    DhGroup::rfc3526_4096()};
  bool check_primality = true;

  /// No size or membership requirements; only structural sanity. For toy
  /// groups in tests.
  static DhPolicy permissive();
};

/// Throws Error{WeakParameters} if the group fails the policy.
void validate_group(const BigInt& p, const BigInt& g, const DhPolicy& policy);

struct DhKeys {
  BigInt p;
  BigInt g;
  BigInt private_exponent;
  BigInt public_value;
};

/// Errors: WeakParameters, DegenerateValue (after bounded retries).
DhKeys dh_generate(const BigInt& p, const BigInt& g, RandomSource& rng,
                   const DhPolicy& policy = DhPolicy{});

#ifdef WEBAGENT_TEST_HOOKS
namespace testing {
DhKeys dh_keys_with_exponent(const BigInt& p, const BigInt& g, const BigInt& exponent);
}
#endif

/// S = peer^x mod p. Errors: OutOfRangePeer unless 1 < peer < p - 1.
BigInt dh_shared(const BigInt& peer_public, const DhKeys& keys);

// ---------------------------------------------------------------------------
// KEX signature input and derived secrets

/// mpint p ‖ mpint g ‖ mpint e ‖ string method ‖ string referer ‖ string k ‖ string d
Bytes kex_sign_bytes(const BigInt& p, const BigInt& g, const BigInt& e, std::string_view method,
                     std::string_view referer, ByteView k, ByteView d);

/// Verifies req.sign under req.k. Errors: MalformedKeyBlob,
/// MalformedSignatureBlob; a well-formed but wrong signature returns false.
bool verify_kex_signature(const wire::KexDhRequest& req, std::string_view method,
                          std::string_view referer);

/// Signs the KEX input with the server key, filling req.sign.
void sign_kex_request(wire::KexDhRequest& req, std::string_view method, std::string_view referer,
                      const ssh::PrivateKey& server_key, std::string_view algorithm = {});

struct SessionSecrets {
  BigInt shared_value;  // S
  std::array<std::uint8_t, 32> shared_secret{};
  std::array<std::uint8_t, 32> secret_key{};
  std::array<std::uint8_t, 16> iv{};

  bool operator==(const SessionSecrets&) const = default;
};

/// shared secret = SHA-256(string method ‖ string referer ‖ mpint e ‖ mpint f ‖ mpint S)
/// secret key    = SHA-256(mpint S ‖ string shared secret ‖ byte 'A' ‖ string referer)
/// iv            = SHA-256(mpint S ‖ string shared secret ‖ byte 'B' ‖ string referer)[0..16)
SessionSecrets derive_secrets(std::string_view method, std::string_view referer, const BigInt& e,
                              const BigInt& f, const BigInt& shared_value);

// ---------------------------------------------------------------------------
// Message body encryption

/// Errors: UnsupportedAlgorithm.
wire::MessageBody body_encrypt(const wire::Plaintext& p, const SessionSecrets& secrets,
                               std::uint8_t algorithm, RandomSource& rng);

/// Errors: UnsupportedAlgorithm, BlockAlignment, IdentifierMismatch and
/// plaintext_decode errors.
wire::Plaintext body_decrypt(const wire::MessageBody& mb, const SessionSecrets& secrets,
                             std::initializer_list<wire::BodyType> expected_types);

/// Fresh plaintext with a random `random` field.
wire::Plaintext make_plaintext(ByteView identifier, wire::Payload payload, RandomSource& rng);

// ---------------------------------------------------------------------------
// Option values (RSAES-OAEP, SHA-1/MGF1-SHA-1 as in PKCS #1 defaults)

/// Largest value option_encrypt accepts for an RSA key of `modulus_bytes`.
std::size_t oaep_capacity(std::size_t modulus_bytes);

/// Errors: UnsupportedScheme, NonRsaKey, ValueTooLong.
Bytes option_encrypt(ByteView value, const ssh::PublicKey& server_key, std::uint8_t es);

/// Errors: UnsupportedScheme, NonRsaKey, DecryptFailure.
Bytes option_decrypt(ByteView ciphertext, const ssh::PrivateKey& server_key, std::uint8_t es);

}  // namespace webagent::crypto
