#include "diva/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace diva::log {
namespace {

Level from_env() {
  const char* raw = std::getenv("DIVA_LOG");
  if (raw == nullptr) return Level::Warn;
  const std::string v(raw);
  if (v == "error") return Level::Error;
  if (v == "info") return Level::Info;
  if (v == "debug") return Level::Debug;
  return Level::Warn;
}

std::atomic<int>& current() {
  static std::atomic<int> lvl{static_cast<int>(from_env())};
  return lvl;
}

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

constexpr const char* tag(Level l) {
  switch (l) {
    case Level::Error: return "error";
    case Level::Warn: return "warn";
    case Level::Info: return "info";
    case Level::Debug: return "debug";
  }
  return "?";
}

}  // namespace

Level level() { return static_cast<Level>(current().load()); }

void set_level(Level lvl) { current().store(static_cast<int>(lvl)); }

void write(Level lvl, std::string_view msg) {
  if (static_cast<int>(lvl) > current().load()) return;
  std::lock_guard lock(sink_mutex());
  std::cerr << "[diva:" << tag(lvl) << "] " << msg << '\n';
}

}  // namespace diva::log
