#pragma once

#include <string>

namespace gridclear::log {

enum class Level { off = 0, info = 1, debug = 2 };

/// Verbosity from the GRIDCLEAR_LOG environment variable (off|info|debug),
/// read once per process. Unknown values fall back to off.
Level level();

bool enabled(Level at);

/// Writes a line to stderr when the given level is enabled.
void line(Level at, const std::string& message);

inline void info(const std::string& message) { line(Level::info, message); }
inline void debug(const std::string& message) { line(Level::debug, message); }

}  // namespace gridclear::log
