#pragma once

#include <chrono>
#include <cstdint>
#include <memory>

namespace flowdirector {

// All timestamps in the system are integer milliseconds since epoch.
// Daemons and the store never read the system clock directly; they go
// through this interface so the simulator can drive virtual time.
class Clock {
public:
    virtual ~Clock() = default;
    virtual std::int64_t now_ms() const = 0;
};

class SystemClock : public Clock {
public:
    std::int64_t now_ms() const override {
        using namespace std::chrono;
        return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
    }
};

class VirtualClock : public Clock {
public:
    explicit VirtualClock(std::int64_t start_ms = 0) : now_(start_ms) {}

    std::int64_t now_ms() const override { return now_; }

    void set_ms(std::int64_t t) { now_ = t; }
    void advance_ms(std::int64_t dt) { now_ += dt; }

private:
    std::int64_t now_;
};

using ClockPtr = std::shared_ptr<Clock>;

}  // namespace flowdirector
