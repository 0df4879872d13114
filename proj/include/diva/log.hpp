#pragma once

#include <string_view>

namespace diva::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Active level, read once from the DIVA_LOG environment variable
/// (error | info | debug); defaults to warnings and errors.
Level level();
void set_level(Level lvl);

void write(Level lvl, std::string_view msg);

inline void error(std::string_view msg) { write(Level::Error, msg); }
inline void warn(std::string_view msg) { write(Level::Warn, msg); }
inline void info(std::string_view msg) { write(Level::Info, msg); }
inline void debug(std::string_view msg) { write(Level::Debug, msg); }

}  // namespace diva::log
