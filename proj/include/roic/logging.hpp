#pragma once

#include <string>

namespace roic {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

/// Active level, read once from ROIC_LOG_LEVEL (error|info|debug).
/// Defaults to info; unknown values fall back to info.
LogLevel log_level();

void log_error(const std::string& message);
void log_info(const std::string& message);
void log_debug(const std::string& message);

}  // namespace roic
