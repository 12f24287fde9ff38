#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "webagent/bytes.hpp"

namespace webagent {

struct TrustedServerEntry {
  Bytes public_key;  // RFC 4253 §6.6 blob
  std::vector<std::string> referer_prefixes;

  bool operator==(const TrustedServerEntry&) const = default;
};

struct TrustParseOptions {
  /// Accept a base64 key split over several lines; key lines continue until
  /// the first line starting with "http".
  bool allow_wrapped_keys = false;
};

/// Trusted servers file: a base64 key line, one or more Referer prefix lines,
/// then a line holding a single ".". Blank lines between entries are ignored;
/// the final "." may be omitted at end of file.
/// Errors: BadBase64Key, EntryWithoutPrefixes, UnterminatedEntry, BadPrefix.
std::vector<TrustedServerEntry> parse_trusted_file(std::string_view text,
                                                   const TrustParseOptions& options = {});

std::string serialize_trusted_file(const std::vector<TrustedServerEntry>& entries);

/// First entry (file order) whose key equals `public_key` byte-for-byte and
/// one of whose prefixes is a literal prefix of `referer`.
std::optional<TrustedServerEntry> lookup(std::string_view referer, ByteView public_key,
                                         const std::vector<TrustedServerEntry>& entries);

/// Scheme and authority of an absolute URL ("https://host:port"), or empty.
std::string url_origin(std::string_view url);

using TrustSnapshot = std::shared_ptr<const std::vector<TrustedServerEntry>>;

/// Immutable snapshots of the trusted servers list. reload() builds a new
/// snapshot and swaps it in; readers keep whatever snapshot they obtained.
class TrustStore {
 public:
  struct LoadOptions {
    TrustParseOptions parse;
    /// Refuse (InsecurePermissions) rather than warn when the file is
    /// writable by group or other.
    bool strict_permissions = false;
  };
  using Warn = std::function<void(const std::string&)>;

  TrustStore() : snapshot_(std::make_shared<const std::vector<TrustedServerEntry>>()) {}
  explicit TrustStore(std::vector<TrustedServerEntry> entries);

  void reload(const std::filesystem::path& path, const LoadOptions& options, const Warn& warn = {});
  void replace(std::vector<TrustedServerEntry> entries);

  TrustSnapshot snapshot() const;

  std::optional<TrustedServerEntry> lookup(std::string_view referer, ByteView public_key) const {
    return webagent::lookup(referer, public_key, *snapshot());
  }

 private:
  mutable std::mutex mu_;
  TrustSnapshot snapshot_;
};

std::filesystem::path default_trusted_servers_path();

}  // namespace webagent
