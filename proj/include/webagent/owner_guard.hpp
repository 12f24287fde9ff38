#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace webagent {

/// IPv4 endpoint; `ip` in host order (127.0.0.1 == 0x7F000001).
struct SocketAddress {
  std::uint32_t ip = 0;
  std::uint16_t port = 0;

  static std::optional<SocketAddress> parse(std::string_view dotted, std::uint16_t port);
  std::string to_string() const;

  bool operator==(const SocketAddress&) const = default;
};

struct ProcTcpEntry {
  SocketAddress local;
  SocketAddress remote;
  std::uint32_t uid = 0;

  bool operator==(const ProcTcpEntry&) const = default;
};

struct ProcTcpTable {
  std::vector<ProcTcpEntry> entries;
  std::size_t skipped_rows = 0;
};

/// "0100007F:0019" <-> 127.0.0.1:25. The address is the kernel's
/// little-endian rendering of the network-order word; the port is plain hex.
std::string render_proc_address(const SocketAddress& a);
std::optional<SocketAddress> parse_proc_address(std::string_view text);

/// Accepts the kernel's /proc/net/tcp layout ("sl local_address rem_address
/// st ... uid ...") and the three-column "local_address rem_address uid"
/// excerpt layout. Unparseable rows are counted, never fatal.
ProcTcpTable parse_proc_net_tcp(std::string_view text);

/// uid of the peer's outbound socket: the row whose local address is the
/// peer and whose remote address is the agent.
std::optional<std::uint32_t> connection_uid(const SocketAddress& peer, const SocketAddress& local,
                                            const std::vector<ProcTcpEntry>& entries);

/// True iff the peer's row exists and carries `process_uid`.
bool authorize_peer(const SocketAddress& peer, const SocketAddress& local, std::uint32_t process_uid,
                    const std::vector<ProcTcpEntry>& entries);

enum class OwnerPolicy { Enforce, Warn, Off };

std::optional<OwnerPolicy> parse_owner_policy(std::string_view s);
std::string_view to_string(OwnerPolicy p);

class OwnerGuard {
 public:
  struct Decision {
    bool allowed = false;
    /// Non-empty when the decision deserves a log line.
    std::string note;
  };

  /// Under Enforce on a platform without /proc/net/tcp support the
  /// constructor throws ProcUnavailable, refusing to start.
  explicit OwnerGuard(OwnerPolicy policy, std::filesystem::path table_path = "/proc/net/tcp",
                      std::optional<std::uint32_t> process_uid = std::nullopt);

  Decision authorize(const SocketAddress& peer, const SocketAddress& local) const;

  OwnerPolicy policy() const { return policy_; }
  std::uint32_t process_uid() const { return process_uid_; }

 private:
  OwnerPolicy policy_;
  std::filesystem::path table_path_;
  std::uint32_t process_uid_;
};

}  // namespace webagent
