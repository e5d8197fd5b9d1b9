#include "polydbg/log.hpp"

#include <cstdlib>
#include <mutex>

#include <spdlog/sinks/stdout_sinks.h>

namespace polydbg {

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto sink = std::make_shared<spdlog::sinks::stderr_sink_mt>();
    auto log = std::make_shared<spdlog::logger>("polydbg", sink);
    log->set_pattern("ts=%Y-%m-%dT%H:%M:%S.%e level=%l pid=%P msg=\"%v\"");
    auto level = spdlog::level::warn;
    if (const char* env = std::getenv("POLYDBG_LOG"); env != nullptr && *env != '\0') {
      level = spdlog::level::from_str(env);
    }
    log->set_level(level);
    return log;
  }();
  return instance;
}

}  // namespace polydbg
