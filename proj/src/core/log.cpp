#include "adaptnav/core/log.hpp"

#include <cstdlib>
#include <iostream>

namespace adaptnav {

namespace {

LogLevel parse_env_level() {
  const char* env = std::getenv("ADAPT_NAV_LOG");
  if (env == nullptr) return LogLevel::kInfo;
  std::string s(env);
  if (s == "error") return LogLevel::kError;
  if (s == "warn") return LogLevel::kWarn;
  if (s == "info") return LogLevel::kInfo;
  if (s == "debug") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

LogLevel& level_ref() {
  static LogLevel level = parse_env_level();
  return level;
}

const char* tag(LogLevel level) {
  switch (level) {
    case LogLevel::kError: return "error";
    case LogLevel::kWarn: return "warn";
    case LogLevel::kInfo: return "info";
    case LogLevel::kDebug: return "debug";
  }
  return "?";
}

}  // namespace

LogLevel log_level() { return level_ref(); }
void set_log_level(LogLevel level) { level_ref() = level; }

void log_message(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  std::cerr << "[" << tag(level) << "] " << msg << "\n";
}

}  // namespace adaptnav
