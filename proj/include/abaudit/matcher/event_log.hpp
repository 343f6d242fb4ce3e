#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string_view>
#include <vector>

#include "abaudit/core/bytes.hpp"

namespace abaudit::matcher {

using EventTag = std::array<char, 4>;

inline constexpr EventTag kIngestTag{'I', 'N', 'G', 'M'};
inline constexpr EventTag kOpeningRequestTag{'O', 'R', 'E', 'Q'};
inline constexpr EventTag kOpeningSubmitTag{'O', 'S', 'U', 'B'};
inline constexpr EventTag kLedgeredTag{'L', 'E', 'D', 'G'};
inline constexpr EventTag kStaleTag{'S', 'T', 'A', 'L'};

struct EventRecord {
    EventTag tag{};
    Bytes payload;
};

// Append-only sequence of { u32 length | 4-byte tag | payload } records,
// where length covers tag and payload.
class EventLog {
public:
    void append(const EventTag& tag, ByteView payload);
    Bytes bytes() const;
    std::size_t count() const;
    // Existing events are written out first; later appends go to both.
    void attach_file(const std::filesystem::path& path);

    // Throws DecodeError on a truncated or oversized record.
    static std::vector<EventRecord> parse(ByteView bytes);
    static Bytes read_file(const std::filesystem::path& path);

private:
    mutable std::mutex mutex_;
    Bytes data_;
    std::size_t count_ = 0;
    std::ofstream file_;
};

}  // namespace abaudit::matcher
