#pragma once

#include <iostream>
#include <string_view>

namespace detprod {

enum class LogLevel { kQuiet = 0, kWarning = 1, kInfo = 2 };

inline LogLevel& log_level() {
  static LogLevel level = LogLevel::kWarning;
  return level;
}

inline void log_warning(std::string_view msg) {
  if (log_level() >= LogLevel::kWarning) std::cerr << "warning: " << msg << '\n';
}

inline void log_info(std::string_view msg) {
  if (log_level() >= LogLevel::kInfo) std::cerr << msg << '\n';
}

}  // namespace detprod
