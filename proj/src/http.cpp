#include "webagent/http.hpp"

#include <cctype>

namespace webagent {

std::optional<std::string> find_header(const HeaderList& headers, std::string_view name) {
  auto lower_eq = [](std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
        return false;
    return true;
  };
  for (const auto& [k, v] : headers)
    if (lower_eq(k, name)) return v;
  return std::nullopt;
}

}  // namespace webagent
