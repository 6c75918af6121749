#pragma once

#include <string>

namespace uncq::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

// Threshold comes from UNCQ_LOG={error,warn,info,debug}; default warn.
Level threshold();
void write(Level level, const std::string& message);

inline void error(const std::string& m) { write(Level::error, m); }
inline void warn(const std::string& m) { write(Level::warn, m); }
inline void info(const std::string& m) { write(Level::info, m); }
inline void debug(const std::string& m) { write(Level::debug, m); }

}  // namespace uncq::log
