#include "webagent/error.hpp"

namespace webagent {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::BadMagic: return "BadMagic";
    case Errc::UnsupportedVersion: return "UnsupportedVersion";
    case Errc::UnknownType: return "UnknownType";
    case Errc::Truncated: return "Truncated";
    case Errc::TrailingBytes: return "TrailingBytes";
    case Errc::MalformedMpint: return "MalformedMpint";
    case Errc::MissingP: return "MissingP";
    case Errc::EmptyFormField: return "EmptyFormField";
    case Errc::BadBase64: return "BadBase64";
    case Errc::Oversize: return "Oversize";
    case Errc::UnknownBodyType: return "UnknownBodyType";
    case Errc::UnexpectedBodyType: return "UnexpectedBodyType";
    case Errc::UnsupportedAlgorithm: return "UnsupportedAlgorithm";
    case Errc::BlockAlignment: return "BlockAlignment";
    case Errc::IdentifierMismatch: return "IdentifierMismatch";
    case Errc::WeakParameters: return "WeakParameters";
    case Errc::DegenerateValue: return "DegenerateValue";
    case Errc::OutOfRangePeer: return "OutOfRangePeer";
    case Errc::MalformedKeyBlob: return "MalformedKeyBlob";
    case Errc::MalformedSignatureBlob: return "MalformedSignatureBlob";
    case Errc::UnsupportedScheme: return "UnsupportedScheme";
    case Errc::ValueTooLong: return "ValueTooLong";
    case Errc::NonRsaKey: return "NonRsaKey";
    case Errc::EmptyField: return "EmptyField";
    case Errc::UnsupportedKeyType: return "UnsupportedKeyType";
    case Errc::KeyParse: return "KeyParse";
    case Errc::CryptoFailure: return "CryptoFailure";
    case Errc::BadBase64Key: return "BadBase64Key";
    case Errc::EntryWithoutPrefixes: return "EntryWithoutPrefixes";
    case Errc::UnterminatedEntry: return "UnterminatedEntry";
    case Errc::BadPrefix: return "BadPrefix";
    case Errc::InsecurePermissions: return "InsecurePermissions";
    case Errc::CapacityExceeded: return "CapacityExceeded";
    case Errc::ProcUnavailable: return "ProcUnavailable";
    case Errc::NoKeysLoaded: return "NoKeysLoaded";
    case Errc::UntrustedServer: return "UntrustedServer";
    case Errc::BadSignature: return "BadSignature";
    case Errc::UnknownSession: return "UnknownSession";
    case Errc::RefererMismatch: return "RefererMismatch";
    case Errc::MissingReferer: return "MissingReferer";
    case Errc::MissingUserOrService: return "MissingUserOrService";
    case Errc::DecryptFailure: return "DecryptFailure";
    case Errc::WrongBodyType: return "WrongBodyType";
    case Errc::UnauthorizedKey: return "UnauthorizedKey";
    case Errc::AgentFailure: return "AgentFailure";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace webagent
