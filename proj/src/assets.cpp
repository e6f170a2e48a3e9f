#include "boxtrack/assets.hpp"

#include <map>
#include <sstream>

#include "boxtrack/errors.hpp"

namespace boxtrack {

namespace detail {
const std::map<std::string_view, std::string_view>& embedded_assets();
}

std::string_view asset(std::string_view name) {
  const auto& all = detail::embedded_assets();
  auto it = all.find(name);
  if (it == all.end()) throw IoError("no bundled asset named '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> asset_names() {
  std::vector<std::string> out;
  for (const auto& [name, _] : detail::embedded_assets()) out.emplace_back(name);
  return out;
}

std::vector<std::string> asset_lines(std::string_view name) {
  std::istringstream in{std::string(asset(name))};
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

}  // namespace boxtrack
