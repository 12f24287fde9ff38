#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace webagent {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

inline std::string to_string(ByteView b) { return std::string(b.begin(), b.end()); }

std::string to_hex(ByteView b);

/// Accepts upper/lower case and ignores ASCII whitespace, so hex dumps with
/// spaces and line breaks can be fed in directly. Throws on odd digit count.
Bytes from_hex(std::string_view hex);

/// Standard alphabet, `=` padded.
std::string base64_encode(ByteView b);

/// Strict decode: standard alphabet, padding required, no whitespace.
/// Throws Error{Errc::BadBase64}.
Bytes base64_decode(std::string_view text);

/// Timing-independent equality for secrets and identifiers.
bool constant_time_equal(ByteView a, ByteView b);

}  // namespace webagent
