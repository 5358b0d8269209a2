#include "clothfit/logging.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>

namespace clothfit {

namespace {

LogLevel parse_level(const char* s) {
    if (!s) return LogLevel::Warn;
    if (std::strcmp(s, "debug") == 0) return LogLevel::Debug;
    if (std::strcmp(s, "info") == 0) return LogLevel::Info;
    if (std::strcmp(s, "warn") == 0) return LogLevel::Warn;
    if (std::strcmp(s, "error") == 0) return LogLevel::Error;
    if (std::strcmp(s, "off") == 0) return LogLevel::Off;
    return LogLevel::Warn;
}

LogLevel& level_ref() {
    static LogLevel level = parse_level(std::getenv("CF_LOG_LEVEL"));
    return level;
}

const char* level_name(LogLevel l) {
    switch (l) {
        case LogLevel::Debug: return "debug";
        case LogLevel::Info: return "info";
        case LogLevel::Warn: return "warn";
        case LogLevel::Error: return "error";
        default: return "off";
    }
}

std::mutex log_mutex;

} // namespace

LogLevel log_level() { return level_ref(); }

void set_log_level(LogLevel level) { level_ref() = level; }

void log_message(LogLevel level, const std::string& msg) {
    if (level < level_ref()) return;
    std::lock_guard<std::mutex> lock(log_mutex);
    std::fprintf(stderr, "[clothfit %s] %s\n", level_name(level), msg.c_str());
}

} // namespace clothfit
