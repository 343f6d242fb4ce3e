#include "abaudit/core/date.hpp"

#include <cstdio>

#include "abaudit/core/errors.hpp"

namespace abaudit {

using std::chrono::days;
using std::chrono::sys_days;
using std::chrono::year_month_day;

Date::Date(int y, unsigned m, unsigned d)
    : ymd_{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}} {
    if (!ymd_.ok() || y < 1 || y > 9999) {
        throw ValidationError("invalid calendar date");
    }
}

Date Date::parse_iso(std::string_view text) {
    auto digits = [&](std::size_t from, std::size_t n) {
        int v = 0;
        for (std::size_t i = from; i < from + n; ++i) {
            char c = text[i];
            if (c < '0' || c > '9') throw ValidationError("invalid ISO date: " + std::string(text));
            v = v * 10 + (c - '0');
        }
        return v;
    };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw ValidationError("invalid ISO date: " + std::string(text));
    }
    int y = digits(0, 4);
    int m = digits(5, 2);
    int d = digits(8, 2);
    try {
        return Date(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
    } catch (const ValidationError&) {
        throw ValidationError("invalid ISO date: " + std::string(text));
    }
}

Date Date::from_days(std::int64_t days_since_epoch) {
    // 0001-01-01 and 9999-12-31 relative to 1970-01-01.
    if (days_since_epoch < -719162 || days_since_epoch > 2932896) {
        throw ValidationError("day count outside supported calendar range");
    }
    year_month_day ymd{sys_days{days{days_since_epoch}}};
    return Date(static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
}

Date Date::from_unix_seconds(std::int64_t s) {
    // Floor division so negative timestamps land on the previous day.
    std::int64_t d = s / 86400;
    if (s % 86400 < 0) --d;
    return from_days(d);
}

std::string Date::iso() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year(), month(), day());
    return buf;
}

std::string Date::compact() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d%02u%02u", year(), month(), day());
    return buf;
}

std::int64_t Date::days_since_epoch() const {
    return sys_days{ymd_}.time_since_epoch().count();
}

}  // namespace abaudit
