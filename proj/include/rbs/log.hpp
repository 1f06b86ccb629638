#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace rbs::log {

enum class Level { error = 0, info = 1, debug = 2 };

inline Level threshold() {
    static Level lvl = [] {
        const char* env = std::getenv("RBS_LOG");
        if (!env) return Level::error;
        std::string s(env);
        if (s == "debug") return Level::debug;
        if (s == "info") return Level::info;
        return Level::error;
    }();
    return lvl;
}

inline void write(Level lvl, const std::string& msg) {
    if (static_cast<int>(lvl) <= static_cast<int>(threshold())) {
        const char* tag = lvl == Level::error ? "error" : lvl == Level::info ? "info" : "debug";
        std::cerr << "[rbs:" << tag << "] " << msg << "\n";
    }
}

inline void error(const std::string& m) { write(Level::error, m); }
inline void info(const std::string& m) { write(Level::info, m); }
inline void debug(const std::string& m) { write(Level::debug, m); }

} // namespace rbs::log
