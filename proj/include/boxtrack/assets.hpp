#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace boxtrack {

/// Bundled data file by path relative to data/, e.g. "lexicons/bnc.txt".
/// The files are compiled in so the CLI and the Python module need no
/// install-time data directory. Throws IoError for unknown names.
std::string_view asset(std::string_view name);

std::vector<std::string> asset_names();

/// Non-blank lines of a bundled text asset.
std::vector<std::string> asset_lines(std::string_view name);

}  // namespace boxtrack
