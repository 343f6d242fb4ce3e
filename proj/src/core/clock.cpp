#include "abaudit/core/clock.hpp"

#include <atomic>
#include <chrono>
#include <memory>

namespace abaudit {

Clock system_clock() {
    return [] {
        return std::chrono::duration_cast<std::chrono::seconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
    };
}

Clock logical_clock(Timestamp start, Timestamp step) {
    auto next = std::make_shared<std::atomic<Timestamp>>(start);
    return [next, step] { return next->fetch_add(step); };
}

}  // namespace abaudit
