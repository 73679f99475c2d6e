#pragma once

#include <iostream>
#include <mutex>
#include <sstream>
#include <string>

namespace flowdirector::log {

enum class Level { DEBUG = 0, INFO = 1, WARN = 2, ERROR = 3 };

Level& threshold();
std::mutex& sink_mutex();

// Stream-style line logger; flushes one line on destruction.
class Line {
public:
    Line(Level level, const char* tag) : level_(level) {
        buf_ << "[" << name(level) << "] " << tag << ": ";
    }

    Line(const Line&) = delete;
    Line& operator=(const Line&) = delete;

    ~Line() {
        if (level_ < threshold()) return;
        std::lock_guard<std::mutex> lk(sink_mutex());
        std::cerr << buf_.str() << "\n";
    }

    template <typename T>
    Line& operator<<(const T& v) {
        buf_ << v;
        return *this;
    }

private:
    static const char* name(Level l) {
        switch (l) {
            case Level::DEBUG: return "debug";
            case Level::INFO: return "info";
            case Level::WARN: return "warn";
            default: return "error";
        }
    }

    Level level_;
    std::ostringstream buf_;
};

inline Line debug(const char* tag) { return Line(Level::DEBUG, tag); }
inline Line info(const char* tag) { return Line(Level::INFO, tag); }
inline Line warn(const char* tag) { return Line(Level::WARN, tag); }
inline Line error(const char* tag) { return Line(Level::ERROR, tag); }

}  // namespace flowdirector::log
