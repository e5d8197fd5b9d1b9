#pragma once

#include <memory>

#include <spdlog/spdlog.h>

namespace polydbg {

/// Process-wide logger writing structured `key=value` lines to stderr.
/// Verbosity comes from the POLYDBG_LOG environment variable
/// (trace, debug, info, warn, error, off); default is warn.
std::shared_ptr<spdlog::logger> logger();

}  // namespace polydbg

#define PDBG_TRACE(...) SPDLOG_LOGGER_TRACE(::polydbg::logger(), __VA_ARGS__)
#define PDBG_DEBUG(...) SPDLOG_LOGGER_DEBUG(::polydbg::logger(), __VA_ARGS__)
#define PDBG_INFO(...) SPDLOG_LOGGER_INFO(::polydbg::logger(), __VA_ARGS__)
#define PDBG_WARN(...) SPDLOG_LOGGER_WARN(::polydbg::logger(), __VA_ARGS__)
#define PDBG_ERROR(...) SPDLOG_LOGGER_ERROR(::polydbg::logger(), __VA_ARGS__)
