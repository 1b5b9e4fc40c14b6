#pragma once

#include <utility>

#include <spdlog/spdlog.h>

namespace causa::log {

/// Library logger writing to stderr. The level comes from the CAUSA_LOG
/// environment variable (trace, debug, info, warn, error, off); default warn.
spdlog::logger& logger();

template <typename... Args>
void debug(fmt::format_string<Args...> format, Args&&... args) {
    logger().debug(format, std::forward<Args>(args)...);
}

template <typename... Args>
void info(fmt::format_string<Args...> format, Args&&... args) {
    logger().info(format, std::forward<Args>(args)...);
}

template <typename... Args>
void warn(fmt::format_string<Args...> format, Args&&... args) {
    logger().warn(format, std::forward<Args>(args)...);
}

}  // namespace causa::log
