#pragma once

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace precoder::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3 };

/// Level comes from PRECODER_LOG (debug|info|warn|error), default warn.
inline Level threshold() {
    static const Level level = [] {
        const char* env = std::getenv("PRECODER_LOG");
        if (!env) return Level::Warn;
        if (!std::strcmp(env, "debug")) return Level::Debug;
        if (!std::strcmp(env, "info")) return Level::Info;
        if (!std::strcmp(env, "error")) return Level::Error;
        return Level::Warn;
    }();
    return level;
}

inline void emit(Level level, const char* tag, const char* fmt, std::va_list args) {
    if (level < threshold()) return;
    std::fprintf(stderr, "[%s] ", tag);
    std::vfprintf(stderr, fmt, args);
    std::fputc('\n', stderr);
}

#define PRECODER_LOG_FN(name, level, tag)                    \
    inline void name(const char* fmt, ...) {                 \
        std::va_list args;                                   \
        va_start(args, fmt);                                 \
        emit(level, tag, fmt, args);                         \
        va_end(args);                                        \
    }

PRECODER_LOG_FN(debug, Level::Debug, "debug")
PRECODER_LOG_FN(info, Level::Info, "info")
PRECODER_LOG_FN(warn, Level::Warn, "warn")
PRECODER_LOG_FN(error, Level::Error, "error")

#undef PRECODER_LOG_FN

} // namespace precoder::log
