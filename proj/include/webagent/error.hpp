#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace webagent {

enum class Errc {
  // wire_codec
  BadMagic,
  UnsupportedVersion,
  UnknownType,
  Truncated,
  TrailingBytes,
  MalformedMpint,
  MissingP,
  EmptyFormField,
  BadBase64,
  Oversize,
  UnknownBodyType,
  UnexpectedBodyType,
  // crypto_core
  UnsupportedAlgorithm,
  BlockAlignment,
  IdentifierMismatch,
  WeakParameters,
  DegenerateValue,
  OutOfRangePeer,
  MalformedKeyBlob,
  MalformedSignatureBlob,
  UnsupportedScheme,
  ValueTooLong,
  NonRsaKey,
  EmptyField,
  UnsupportedKeyType,
  KeyParse,
  CryptoFailure,
  // trust_store
  BadBase64Key,
  EntryWithoutPrefixes,
  UnterminatedEntry,
  BadPrefix,
  InsecurePermissions,
  // session_manager
  CapacityExceeded,
  // owner_guard
  ProcUnavailable,
  // agent_service
  NoKeysLoaded,
  UntrustedServer,
  BadSignature,
  UnknownSession,
  RefererMismatch,
  MissingReferer,
  MissingUserOrService,
  // refserver
  DecryptFailure,
  WrongBodyType,
  UnauthorizedKey,
  AgentFailure,
  Io,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  explicit Error(Errc code) : std::runtime_error(std::string(to_string(code))), code_(code) {}
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace webagent
