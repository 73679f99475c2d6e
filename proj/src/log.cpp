#include "flowdirector/log.hpp"

namespace flowdirector::log {

Level& threshold() {
    static Level level = Level::WARN;
    return level;
}

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace flowdirector::log
