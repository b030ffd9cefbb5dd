#include "gridclear/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace gridclear::log {

static Level parse_env() {
  const char* raw = std::getenv("GRIDCLEAR_LOG");
  if (raw == nullptr) return Level::off;
  if (std::strcmp(raw, "debug") == 0) return Level::debug;
  if (std::strcmp(raw, "info") == 0) return Level::info;
  return Level::off;
}

Level level() {
  static const Level cached = parse_env();
  return cached;
}

bool enabled(Level at) { return static_cast<int>(level()) >= static_cast<int>(at); }

void line(Level at, const std::string& message) {
  if (!enabled(at)) return;
  std::fprintf(stderr, "[gridclear] %s\n", message.c_str());
}

}  // namespace gridclear::log
