#include "vta/log.hpp"

#include <cstdlib>
#include <iostream>
#include <string>

namespace vta::log {

Level threshold() {
  static const Level level = [] {
    const char* env = std::getenv("VTAC_LOG");
    if (!env) return Level::Warn;
    const std::string v = env;
    if (v == "error" || v == "0") return Level::Error;
    if (v == "info" || v == "2") return Level::Info;
    if (v == "debug" || v == "3") return Level::Debug;
    return Level::Warn;
  }();
  return level;
}

bool enabled(Level level) { return static_cast<int>(level) <= static_cast<int>(threshold()); }

void write(Level level, std::string_view message) {
  if (!enabled(level)) return;
  static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
  std::cerr << "vtac: " << kNames[static_cast<int>(level)] << ": " << message << '\n';
}

}  // namespace vta::log
