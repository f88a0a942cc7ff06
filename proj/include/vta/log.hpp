#pragma once

#include <string_view>

namespace vta::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// From VTAC_LOG: error|warn|info|debug or 0..3. Defaults to warn.
Level threshold();
bool enabled(Level level);
void write(Level level, std::string_view message);

inline void warn(std::string_view m) { write(Level::Warn, m); }
inline void info(std::string_view m) { write(Level::Info, m); }
inline void debug(std::string_view m) { write(Level::Debug, m); }

}  // namespace vta::log
