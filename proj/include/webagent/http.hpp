#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace webagent {

using HeaderList = std::vector<std::pair<std::string, std::string>>;

/// Case-insensitive header lookup; first match wins.
std::optional<std::string> find_header(const HeaderList& headers, std::string_view name);

/// Transport-independent request handed to the agent and the reference
/// server. The HTTP adapters and the in-process harness both produce these.
struct HttpRequest {
  std::string method = "POST";
  std::string path = "/";
  std::string query;  // without '?'
  HeaderList headers;
  std::string body;

  std::optional<std::string> header(std::string_view name) const { return find_header(headers, name); }
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "text/plain";
  HeaderList headers;
  std::string body;

  std::optional<std::string> header(std::string_view name) const { return find_header(headers, name); }
};

inline constexpr std::string_view kFormContentType = "application/x-www-form-urlencoded";

}  // namespace webagent
