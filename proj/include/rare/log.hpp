#pragma once

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>

namespace rare::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3 };

inline Level& threshold() {
    static Level lvl = [] {
        const char* env = std::getenv("RARE_LOG_LEVEL");
        if (!env) return Level::info;
        std::string s(env);
        if (s == "debug") return Level::debug;
        if (s == "warn") return Level::warn;
        if (s == "error") return Level::error;
        return Level::info;
    }();
    return lvl;
}

inline std::mutex& mu() {
    static std::mutex m;
    return m;
}

inline void emit(Level lvl, const std::string& msg) {
    if (lvl < threshold()) return;
    static const char* names[] = {"DEBUG", "INFO", "WARN", "ERROR"};
    std::lock_guard<std::mutex> lock(mu());
    std::cerr << "[rare:" << names[static_cast<int>(lvl)] << "] " << msg << "\n";
}

template <typename... Args>
std::string cat(Args&&... args) {
    std::ostringstream oss;
    (oss << ... << args);
    return oss.str();
}

template <typename... Args>
void debug(Args&&... args) { emit(Level::debug, cat(std::forward<Args>(args)...)); }
template <typename... Args>
void info(Args&&... args) { emit(Level::info, cat(std::forward<Args>(args)...)); }
template <typename... Args>
void warn(Args&&... args) { emit(Level::warn, cat(std::forward<Args>(args)...)); }
template <typename... Args>
void error(Args&&... args) { emit(Level::error, cat(std::forward<Args>(args)...)); }

} // namespace rare::log
