#pragma once

#include <functional>

#include "abaudit/core/date.hpp"

namespace abaudit {

using Clock = std::function<Timestamp()>;

Clock system_clock();

// Starts at `start` and advances by `step` seconds on every read.
Clock logical_clock(Timestamp start, Timestamp step = 1);

}  // namespace abaudit
