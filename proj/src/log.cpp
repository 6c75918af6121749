#include "uncq/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace uncq::log {

namespace {

Level parse_threshold() {
  const char* env = std::getenv("UNCQ_LOG");
  if (env == nullptr) return Level::warn;
  std::string v(env);
  if (v == "error") return Level::error;
  if (v == "warn") return Level::warn;
  if (v == "info") return Level::info;
  if (v == "debug") return Level::debug;
  return Level::warn;
}

const char* level_tag(Level level) {
  switch (level) {
    case Level::error: return "error";
    case Level::warn: return "warn";
    case Level::info: return "info";
    case Level::debug: return "debug";
  }
  return "?";
}

std::mutex io_mutex;

}  // namespace

Level threshold() {
  static Level t = parse_threshold();
  return t;
}

void write(Level level, const std::string& message) {
  if (static_cast<int>(level) > static_cast<int>(threshold())) return;
  std::lock_guard<std::mutex> lock(io_mutex);
  std::cerr << "[uncq:" << level_tag(level) << "] " << message << '\n';
}

}  // namespace uncq::log
