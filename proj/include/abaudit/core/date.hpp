#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace abaudit {

// A GMT calendar date. Always valid once constructed.
class Date {
public:
    Date() = default;
    // Throws ValidationError for impossible dates.
    Date(int year, unsigned month, unsigned day);

    // Strict "YYYY-MM-DD"; throws ValidationError otherwise.
    static Date parse_iso(std::string_view text);
    // Calendar day (GMT) containing the given unix timestamp in seconds.
    static Date from_unix_seconds(std::int64_t seconds);
    static Date from_days(std::int64_t days_since_epoch);

    std::string iso() const;      // YYYY-MM-DD
    std::string compact() const;  // YYYYMMDD
    std::int64_t days_since_epoch() const;

    int year() const { return static_cast<int>(ymd_.year()); }
    unsigned month() const { return static_cast<unsigned>(ymd_.month()); }
    unsigned day() const { return static_cast<unsigned>(ymd_.day()); }

    Date plus_days(std::int64_t n) const { return from_days(days_since_epoch() + n); }

    friend bool operator==(const Date&, const Date&) = default;
    friend std::strong_ordering operator<=>(const Date& a, const Date& b) {
        return a.days_since_epoch() <=> b.days_since_epoch();
    }

private:
    std::chrono::year_month_day ymd_{std::chrono::year{1970}, std::chrono::month{1},
                                     std::chrono::day{1}};
};

// Unix seconds; injected so tests and simulations run on a logical clock.
using Timestamp = std::int64_t;

}  // namespace abaudit
