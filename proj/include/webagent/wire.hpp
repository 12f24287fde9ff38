#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "webagent/bigint.hpp"
#include "webagent/bytes.hpp"

namespace webagent {
class RandomSource;
}

namespace webagent::wire {

// Protocol constants.
inline constexpr std::string_view kMagic = "SSHWebAgent";
inline constexpr std::uint8_t kVersion_1_1 = 0x11;

enum class MessageType : std::uint8_t {
  KexDhRequest = 0x02,
  KexDhResponse = 0x03,
  Private = 0x04,
};

enum class Algorithm : std::uint8_t {
  Aes256Cbc = 0x02,
};

enum class BodyType : std::uint8_t {
  New = 0x02,
  AuthRequest = 0x03,
  AuthResponse = 0x04,
};

enum class EncryptionScheme : std::uint8_t {
  Pkcs1RsaesOaep = 0x02,
};

inline constexpr std::size_t kAesBlockSize = 16;
/// Upper bound on the base64 text carried in the P form field.
inline constexpr std::size_t kMaxEncodedMessage = 1u << 20;

/// Appends RFC 4251 data types to a growing buffer.
class Writer {
 public:
  Writer& byte(std::uint8_t v);
  Writer& boolean(bool v);
  Writer& uint32(std::uint32_t v);
  Writer& string(ByteView v);
  Writer& string(std::string_view v);
  Writer& mpint(const BigInt& v);
  Writer& raw(ByteView v);

  const Bytes& bytes() const& { return buf_; }
  Bytes take() && { return std::move(buf_); }

 private:
  Bytes buf_;
};

/// Bounds-checked cursor over RFC 4251 data. Every failure throws
/// Error{Errc::Truncated} (or MalformedMpint); nothing is allocated before the
/// corresponding length has been checked against the remaining input.
class Reader {
 public:
  explicit Reader(ByteView in) : in_(in) {}

  std::uint8_t byte();
  bool boolean();
  std::uint32_t uint32();
  Bytes string();
  std::string text();
  BigInt mpint();
  Bytes raw(std::size_t n);

  std::size_t remaining() const { return in_.size() - pos_; }
  bool at_end() const { return remaining() == 0; }
  /// Throws TrailingBytes if input remains.
  void expect_end() const;
  Bytes rest();

 private:
  ByteView take(std::size_t n);
  ByteView in_;
  std::size_t pos_ = 0;
};

/// Canonical SSH mpint of a non-negative integer.
Bytes mpint_encode(const BigInt& value);

// ---------------------------------------------------------------------------
// Outer envelope

struct Message {
  std::uint8_t version = kVersion_1_1;
  MessageType type = MessageType::KexDhRequest;
  Bytes data;

  bool operator==(const Message&) const = default;
};

Bytes encode(const Message& m);
/// Errors: BadMagic, UnsupportedVersion, UnknownType, Truncated, TrailingBytes.
Message decode_message(ByteView b);

// ---------------------------------------------------------------------------
// Session establishment

struct KexDhRequest {
  BigInt p;
  BigInt g;
  BigInt e;
  Bytes d;     // opaque server session data
  Bytes k;     // server public key blob
  Bytes sign;  // signature blob

  bool operator==(const KexDhRequest&) const = default;
};

Bytes encode(const KexDhRequest& r);
KexDhRequest decode_kex_request(ByteView b);

struct KexDhResponse {
  BigInt f;
  Bytes encrypted_body;  // encoded MessageBody of type NEW

  bool operator==(const KexDhResponse&) const = default;
};

Bytes encode(const KexDhResponse& r);
KexDhResponse decode_kex_response(ByteView b);

// ---------------------------------------------------------------------------
// Encrypted envelope

struct MessageBody {
  std::uint8_t algorithm = static_cast<std::uint8_t>(Algorithm::Aes256Cbc);
  Bytes identifier;
  Bytes ciphertext;

  bool operator==(const MessageBody&) const = default;
};

Bytes encode(const MessageBody& mb);
/// Enforces the algorithm constant set (UnsupportedAlgorithm) and block
/// alignment of the ciphertext (BlockAlignment).
MessageBody decode_message_body(ByteView b);

struct NewPayload {
  bool operator==(const NewPayload&) const = default;
};

struct AuthRequestPayload {
  Bytes ssh_session_identifier;

  bool operator==(const AuthRequestPayload&) const = default;
};

struct SignatureItem {
  Bytes publickey;
  Bytes signature;
  Bytes comment;

  bool operator==(const SignatureItem&) const = default;
};

struct OptionEntry {
  Bytes key;
  Bytes value;  // ciphertext under the block's scheme

  bool operator==(const OptionEntry&) const = default;
};

struct OptionBlock {
  std::uint8_t es = static_cast<std::uint8_t>(EncryptionScheme::Pkcs1RsaesOaep);
  std::vector<OptionEntry> options;

  bool operator==(const OptionBlock&) const = default;
};

struct AuthResponsePayload {
  bool status = false;
  std::vector<SignatureItem> signatures;
  OptionBlock options;

  bool operator==(const AuthResponsePayload&) const = default;
};

using Payload = std::variant<NewPayload, AuthRequestPayload, AuthResponsePayload>;

struct Plaintext {
  std::array<std::uint8_t, 4> random{};
  Bytes identifier;
  Payload payload;

  BodyType body_type() const;

  /// Padding is not part of a plaintext's value.
  bool operator==(const Plaintext&) const = default;
};

/// Serializes and appends random padding up to the next multiple of
/// block_size (zero bytes if already aligned).
Bytes plaintext_encode(const Plaintext& p, std::size_t block_size, RandomSource& rng);

/// Parses the type-determined fields; whatever follows is padding and is
/// discarded. Errors: UnknownBodyType, UnexpectedBodyType, Truncated,
/// EmptyField, UnsupportedScheme.
Plaintext plaintext_decode(ByteView b, std::initializer_list<BodyType> expected_types);

/// Raw payload encodings, exposed for golden tests.
Bytes encode_payload(const Payload& payload);

// ---------------------------------------------------------------------------
// HTTP form transport

struct FormRequest {
  Message message;
  std::optional<std::string> user;
  std::optional<std::string> service;

  bool operator==(const FormRequest&) const = default;
};

/// application/x-www-form-urlencoded component encoding.
std::string form_escape(std::string_view s);
std::string form_unescape(std::string_view s);

std::string form_encode(const Message& m, const std::optional<std::string>& user = std::nullopt,
                        const std::optional<std::string>& service = std::nullopt);

/// Errors: MissingP, EmptyFormField, Oversize, BadBase64, and every
/// decode_message error.
FormRequest form_decode(std::string_view body);

/// Parses a form body into ordered key/value pairs (first occurrence wins on
/// lookup via form_field).
std::vector<std::pair<std::string, std::string>> form_parse(std::string_view body);
std::optional<std::string> form_field(const std::vector<std::pair<std::string, std::string>>& fields,
                                      std::string_view key);

}  // namespace webagent::wire
