#include "webagent/owner_guard.hpp"

#include <arpa/inet.h>
#include <unistd.h>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "webagent/error.hpp"

namespace webagent {

namespace {

template <typename T>
std::optional<T> parse_hex(std::string_view s, std::size_t digits) {
  if (s.size() != digits) return std::nullopt;
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<std::uint32_t> parse_dec(std::string_view s) {
  std::uint32_t v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 10);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<ProcTcpEntry> parse_row(const std::vector<std::string_view>& t) {
  // Kernel rows start with the "sl" slot ("0:"), and uid is the eighth field.
  bool kernel = !t.empty() && t[0].ends_with(':');
  std::size_t base = kernel ? 1 : 0;
  std::size_t uid_index = kernel ? 7 : 2;
  if (t.size() <= uid_index) return std::nullopt;
  auto local = parse_proc_address(t[base]);
  auto remote = parse_proc_address(t[base + 1]);
  auto uid = parse_dec(t[uid_index]);
  if (!local || !remote || !uid) return std::nullopt;
  return ProcTcpEntry{*local, *remote, *uid};
}

}  // namespace

std::optional<SocketAddress> SocketAddress::parse(std::string_view dotted, std::uint16_t port) {
  in_addr addr{};
  std::string s(dotted);
  if (inet_pton(AF_INET, s.c_str(), &addr) != 1) return std::nullopt;
  return SocketAddress{ntohl(addr.s_addr), port};
}

std::string SocketAddress::to_string() const {
  return std::to_string(ip >> 24) + "." + std::to_string((ip >> 16) & 0xff) + "." +
         std::to_string((ip >> 8) & 0xff) + "." + std::to_string(ip & 0xff) + ":" + std::to_string(port);
}

std::string render_proc_address(const SocketAddress& a) {
  // Octets appear in reverse order: 127.0.0.1 -> 0100007F.
  std::uint32_t le = (a.ip & 0xff) << 24 | ((a.ip >> 8) & 0xff) << 16 | ((a.ip >> 16) & 0xff) << 8 | (a.ip >> 24);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08X:%04X", le, a.port);
  return buf;
}

std::optional<SocketAddress> parse_proc_address(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  auto word = parse_hex<std::uint32_t>(text.substr(0, colon), 8);
  auto port = parse_hex<std::uint16_t>(text.substr(colon + 1), 4);
  if (!word || !port) return std::nullopt;
  std::uint32_t w = *word;
  std::uint32_t ip = (w & 0xff) << 24 | ((w >> 8) & 0xff) << 16 | ((w >> 16) & 0xff) << 8 | (w >> 24);
  return SocketAddress{ip, *port};
}

ProcTcpTable parse_proc_net_tcp(std::string_view text) {
  ProcTcpTable table;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    auto t = tokens(line);
    if (t.empty()) continue;
    if (line.find("local_address") != std::string_view::npos) continue;  // header
    if (auto row = parse_row(t)) {
      table.entries.push_back(*row);
    } else {
      ++table.skipped_rows;
    }
  }
  return table;
}

std::optional<std::uint32_t> connection_uid(const SocketAddress& peer, const SocketAddress& local,
                                            const std::vector<ProcTcpEntry>& entries) {
  for (const auto& e : entries)
    if (e.local == peer && e.remote == local) return e.uid;
  return std::nullopt;
}

bool authorize_peer(const SocketAddress& peer, const SocketAddress& local, std::uint32_t process_uid,
                    const std::vector<ProcTcpEntry>& entries) {
  auto uid = connection_uid(peer, local, entries);
  return uid && *uid == process_uid;
}

std::optional<OwnerPolicy> parse_owner_policy(std::string_view s) {
  if (s == "enforce") return OwnerPolicy::Enforce;
  if (s == "warn") return OwnerPolicy::Warn;
  if (s == "off") return OwnerPolicy::Off;
  return std::nullopt;
}

std::string_view to_string(OwnerPolicy p) {
  switch (p) {
    case OwnerPolicy::Enforce: return "enforce";
    case OwnerPolicy::Warn: return "warn";
    case OwnerPolicy::Off: return "off";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// OwnerGuard

OwnerGuard::OwnerGuard(OwnerPolicy policy, std::filesystem::path table_path,
                       std::optional<std::uint32_t> process_uid)
    : policy_(policy),
      table_path_(std::move(table_path)),
      process_uid_(process_uid.value_or(static_cast<std::uint32_t>(::getuid()))) {
#ifndef __linux__
  if (policy_ == OwnerPolicy::Enforce)
    throw Error(Errc::ProcUnavailable, "connection owner checks need Linux /proc/net/tcp");
#endif
}

OwnerGuard::Decision OwnerGuard::authorize(const SocketAddress& peer, const SocketAddress& local) const {
  if (policy_ == OwnerPolicy::Off) return {true, {}};

  std::ifstream in(table_path_);
  if (!in) {
    if (policy_ == OwnerPolicy::Enforce) return {false, "ProcUnavailable: refusing connection"};
    return {true, "ProcUnavailable: owner check skipped"};
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  auto table = parse_proc_net_tcp(ss.str());
  auto uid = connection_uid(peer, local, table.entries);
  if (!uid) return {false, "peer " + peer.to_string() + " not found in " + table_path_.string()};
  if (*uid != process_uid_)
    return {false, "peer uid " + std::to_string(*uid) + " != agent uid " + std::to_string(process_uid_)};
  return {true, {}};
}

}  // namespace webagent
