#include "webagent/trust_store.hpp"

#include <sys/stat.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "webagent/error.hpp"

namespace webagent {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

bool starts_with_http(std::string_view line) { return line.starts_with("http"); }

bool valid_prefix(std::string_view line) {
  return line.starts_with("https://") || line.starts_with("http://");
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    auto nl = text.find('\n');
    lines.push_back(trim(text.substr(0, nl)));
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return lines;
}

Bytes decode_key(const std::string& b64) {
  try {
    Bytes key = base64_decode(b64);
    if (key.empty()) throw Error(Errc::BadBase64Key);
    return key;
  } catch (const Error&) {
    throw Error(Errc::BadBase64Key);
  }
}

}  // namespace

std::vector<TrustedServerEntry> parse_trusted_file(std::string_view text, const TrustParseOptions& options) {
  auto lines = split_lines(text);
  std::vector<TrustedServerEntry> entries;
  std::size_t i = 0;
  while (i < lines.size()) {
    if (lines[i].empty()) {
      ++i;
      continue;
    }
    std::string key_text(lines[i++]);
    if (options.allow_wrapped_keys) {
      while (i < lines.size() && !lines[i].empty() && lines[i] != "." && !starts_with_http(lines[i]))
        key_text += lines[i++];
    }
    TrustedServerEntry entry;
    entry.public_key = decode_key(key_text);

    while (i < lines.size()) {
      std::string_view line = lines[i];
      if (line == ".") {
        ++i;
        break;
      }
      if (line.empty()) {
        ++i;
        continue;
      }
      if (!starts_with_http(line)) {
        // A key line where a prefix or the terminating dot was expected.
        if (entry.referer_prefixes.empty()) throw Error(Errc::EntryWithoutPrefixes);
        throw Error(Errc::UnterminatedEntry);
      }
      if (!valid_prefix(line)) throw Error(Errc::BadPrefix, std::string(line));
      entry.referer_prefixes.emplace_back(line);
      ++i;
    }
    if (entry.referer_prefixes.empty()) throw Error(Errc::EntryWithoutPrefixes);
    // a missing dot is tolerated at end of file
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::string serialize_trusted_file(const std::vector<TrustedServerEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    out += base64_encode(e.public_key);
    out += '\n';
    for (const auto& p : e.referer_prefixes) {
      out += p;
      out += '\n';
    }
    out += ".\n";
  }
  return out;
}

std::optional<TrustedServerEntry> lookup(std::string_view referer, ByteView public_key,
                                         const std::vector<TrustedServerEntry>& entries) {
  for (const auto& e : entries) {
    if (!constant_time_equal(e.public_key, public_key)) continue;
    for (const auto& prefix : e.referer_prefixes)
      if (referer.starts_with(prefix)) return e;
  }
  return std::nullopt;
}

std::string url_origin(std::string_view url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) return {};
  auto authority_end = url.find_first_of("/?#", scheme_end + 3);
  return std::string(url.substr(0, authority_end));
}

// ---------------------------------------------------------------------------
// TrustStore

TrustStore::TrustStore(std::vector<TrustedServerEntry> entries)
    : snapshot_(std::make_shared<const std::vector<TrustedServerEntry>>(std::move(entries))) {}

void TrustStore::reload(const std::filesystem::path& path, const LoadOptions& options, const Warn& warn) {
  struct stat st {};
  if (::stat(path.c_str(), &st) != 0) throw Error(Errc::Io, "cannot stat " + path.string());
  if ((st.st_mode & (S_IWGRP | S_IWOTH)) != 0) {
    if (options.strict_permissions)
      throw Error(Errc::InsecurePermissions, path.string() + " is writable by group or other");
    if (warn) warn(path.string() + " is writable by group or other");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  replace(parse_trusted_file(ss.str(), options.parse));
}

void TrustStore::replace(std::vector<TrustedServerEntry> entries) {
  auto next = std::make_shared<const std::vector<TrustedServerEntry>>(std::move(entries));
  std::lock_guard lock(mu_);
  snapshot_ = std::move(next);
}

TrustSnapshot TrustStore::snapshot() const {
  std::lock_guard lock(mu_);
  return snapshot_;
}

std::filesystem::path default_trusted_servers_path() {
  const char* xdg = std::getenv("XDG_CONFIG_HOME");
  if (xdg != nullptr && *xdg != '\0') return std::filesystem::path(xdg) / "ssh-webagent" / "trusted_servers";
  const char* home = std::getenv("HOME");
  return std::filesystem::path(home != nullptr ? home : ".") / ".config" / "ssh-webagent" / "trusted_servers";
}

}  // namespace webagent
