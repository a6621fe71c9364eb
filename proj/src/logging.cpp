#include "roic/logging.hpp"

#include <cstdlib>
#include <iostream>

namespace roic {

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("ROIC_LOG_LEVEL");
    if (env == nullptr) return LogLevel::kInfo;
    const std::string value(env);
    if (value == "error") return LogLevel::kError;
    if (value == "debug") return LogLevel::kDebug;
    return LogLevel::kInfo;
  }();
  return level;
}

namespace {

void emit(LogLevel at, const char* tag, const std::string& message) {
  if (static_cast<int>(log_level()) >= static_cast<int>(at)) {
    std::cerr << tag << message << "\n";
  }
}

}  // namespace

void log_error(const std::string& message) {
  emit(LogLevel::kError, "[error] ", message);
}

void log_info(const std::string& message) {
  emit(LogLevel::kInfo, "[info] ", message);
}

void log_debug(const std::string& message) {
  emit(LogLevel::kDebug, "[debug] ", message);
}

}  // namespace roic
