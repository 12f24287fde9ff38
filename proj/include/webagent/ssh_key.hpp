#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "webagent/bytes.hpp"
#include "webagent/wire.hpp"

struct evp_pkey_st;

namespace webagent::ssh {

enum class KeyType { Rsa, Ed25519 };

inline constexpr std::string_view kSshRsa = "ssh-rsa";
inline constexpr std::string_view kRsaSha2_256 = "rsa-sha2-256";
inline constexpr std::string_view kRsaSha2_512 = "rsa-sha2-512";
inline constexpr std::string_view kSshEd25519 = "ssh-ed25519";

/// Name that appears at the head of the key's public blob.
std::string_view key_type_name(KeyType type);

/// True if `algorithm` is a signature algorithm usable with keys of `type`.
bool signature_algorithm_matches(KeyType type, std::string_view algorithm);

/// Shared, immutable handle to an OpenSSL key.
using NativeKey = std::shared_ptr<evp_pkey_st>;

/// A public key together with its RFC 4253 §6.6 blob.
class PublicKey {
 public:
  /// Errors: MalformedKeyBlob, UnsupportedKeyType.
  static PublicKey from_blob(ByteView blob);

  KeyType type() const { return type_; }
  const Bytes& blob() const { return blob_; }
  int bits() const;

  /// Verifies an RFC 4253 signature blob over `data`. A well-formed blob
  /// that does not verify returns false; a blob whose framing or algorithm
  /// does not fit this key throws MalformedSignatureBlob.
  bool verify(ByteView data, ByteView signature_blob) const;

  evp_pkey_st* native() const { return key_.get(); }

 private:
  friend class PrivateKey;
  PublicKey(KeyType type, Bytes blob, NativeKey key)
      : type_(type), blob_(std::move(blob)), key_(std::move(key)) {}

  KeyType type_;
  Bytes blob_;
  NativeKey key_;
};

class PrivateKey {
 public:
  /// Unencrypted PEM (PKCS#8 or traditional RSA) or "openssh-key-v1".
  /// Errors: KeyParse, UnsupportedKeyType, Io.
  static PrivateKey load_file(const std::filesystem::path& path);
  static PrivateKey from_text(std::string_view text, std::string default_comment = {});
  static PrivateKey from_pem(std::string_view pem, std::string comment = {});
  static PrivateKey from_openssh(std::string_view text);

  KeyType type() const { return public_key_.type(); }
  const PublicKey& public_key() const { return public_key_; }
  const std::string& comment() const { return comment_; }

  /// rsa-sha2-256 for RSA keys, ssh-ed25519 for Ed25519.
  std::string_view default_signature_algorithm() const;

  /// Returns an RFC 4253 signature blob. Errors: UnsupportedKeyType when the
  /// algorithm does not fit the key.
  Bytes sign(ByteView data, std::string_view algorithm) const;

  evp_pkey_st* native() const { return key_.get(); }

 private:
  PrivateKey(NativeKey key, std::string comment);

  NativeKey key_;
  PublicKey public_key_;
  std::string comment_;
};

/// Absolute accessor for the algorithm-name string at the head of a key or
/// signature blob. Throws Truncated on malformed framing.
std::string blob_algorithm(ByteView blob);

// ---------------------------------------------------------------------------
// SSH "publickey" userauth signing

struct SshUserauthBlob {
  Bytes session_identifier;
  std::string user;
  std::string service;
  std::string key_algorithm;
  Bytes key_blob;
};

inline constexpr std::uint8_t kSshMsgUserauthRequest = 50;

/// RFC 4252 §7 signed data. Errors: EmptyField.
Bytes build_ssh_userauth_blob(const SshUserauthBlob& b);

/// Signs with the key's default algorithm unless one is given.
wire::SignatureItem ssh_sign(ByteView blob, const PrivateKey& key, std::string_view algorithm = {});

/// Verifies item.signature over blob with item.publickey. Malformed key or
/// signature framing yields false.
bool ssh_verify(ByteView blob, const wire::SignatureItem& item);

}  // namespace webagent::ssh
