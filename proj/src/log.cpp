#include "causa/log.hpp"

#include <cstdlib>
#include <memory>

#include <spdlog/sinks/stdout_sinks.h>

namespace causa::log {

spdlog::logger& logger() {
    static const std::shared_ptr<spdlog::logger> instance = [] {
        auto l = std::make_shared<spdlog::logger>("causa", std::make_shared<spdlog::sinks::stderr_sink_mt>());
        const char* env = std::getenv("CAUSA_LOG");
        l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
        l->set_pattern("[%l] %v");
        return l;
    }();
    return *instance;
}

}  // namespace causa::log
