#pragma once

#include <string_view>

namespace facegen::log {

enum class Level { Info, Warning, Error };

/// Line-oriented logging to stderr. JSON mode writes one object per line.
void set_json(bool enabled);
void set_quiet(bool quiet);
/// `code`, when given, is added as a separate field in JSON mode.
void write(Level level, std::string_view message, std::string_view code = {});

inline void info(std::string_view message) { write(Level::Info, message); }
inline void warning(std::string_view message) { write(Level::Warning, message); }
inline void error(std::string_view message, std::string_view code = {}) { write(Level::Error, message, code); }

}  // namespace facegen::log
