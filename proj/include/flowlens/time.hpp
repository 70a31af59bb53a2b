#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace flowlens {

/// UTC instant with millisecond precision.
struct Timestamp {
    std::int64_t ms_since_epoch = 0;

    friend bool operator==(const Timestamp&, const Timestamp&) = default;
    friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

namespace detail {

// Days since 1970-01-01 for a proleptic Gregorian civil date.
inline std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int yr = static_cast<int>(yoe) + static_cast<int>(era) * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = yr + (m <= 2);
}

inline bool parse_fixed_digits(std::string_view s, std::size_t pos, int count, int& out) {
    if (pos + count > s.size())
        return false;
    int value = 0;
    for (int i = 0; i < count; ++i) {
        const char c = s[pos + i];
        if (c < '0' || c > '9')
            return false;
        value = value * 10 + (c - '0');
    }
    out = value;
    return true;
}

} // namespace detail

/// Parses an ISO-8601 instant: "YYYY-MM-DDTHH:MM:SS[.fff...][Z|±HH:MM|±HHMM]".
/// A missing offset is read as UTC. Returns nullopt on malformed input.
inline std::optional<Timestamp> parse_iso8601(std::string_view s) {
    using detail::parse_fixed_digits;
    int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
    if (!parse_fixed_digits(s, 0, 4, year) || s.size() < 10 || s[4] != '-' || s[7] != '-')
        return std::nullopt;
    if (!parse_fixed_digits(s, 5, 2, month) || !parse_fixed_digits(s, 8, 2, day))
        return std::nullopt;
    if (month < 1 || month > 12 || day < 1 || day > 31)
        return std::nullopt;
    std::size_t pos = 10;
    if (pos < s.size()) {
        if (s[pos] != 'T' && s[pos] != ' ')
            return std::nullopt;
        ++pos;
        if (!parse_fixed_digits(s, pos, 2, hour) || pos + 5 > s.size() || s[pos + 2] != ':')
            return std::nullopt;
        if (!parse_fixed_digits(s, pos + 3, 2, minute))
            return std::nullopt;
        pos += 5;
        if (pos < s.size() && s[pos] == ':') {
            if (!parse_fixed_digits(s, pos + 1, 2, second))
                return std::nullopt;
            pos += 3;
        }
        if (hour > 23 || minute > 59 || second > 60)
            return std::nullopt;
    }
    int millis = 0;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        int digits = 0;
        int frac = 0;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
            if (digits < 3)
                frac = frac * 10 + (s[pos] - '0');
            ++digits;
            ++pos;
        }
        if (digits == 0)
            return std::nullopt;
        while (digits < 3) {
            frac *= 10;
            ++digits;
        }
        millis = frac;
    }
    std::int64_t offset_min = 0;
    if (pos < s.size()) {
        const char c = s[pos];
        if (c == 'Z' || c == 'z') {
            ++pos;
        } else if (c == '+' || c == '-') {
            int oh = 0, om = 0;
            if (!parse_fixed_digits(s, pos + 1, 2, oh))
                return std::nullopt;
            std::size_t opos = pos + 3;
            if (opos < s.size() && s[opos] == ':')
                ++opos;
            if (opos < s.size()) {
                if (!parse_fixed_digits(s, opos, 2, om))
                    return std::nullopt;
                opos += 2;
            }
            offset_min = static_cast<std::int64_t>(oh) * 60 + om;
            if (c == '-')
                offset_min = -offset_min;
            pos = opos;
        } else {
            return std::nullopt;
        }
    }
    if (pos != s.size())
        return std::nullopt;
    const std::int64_t days = detail::days_from_civil(year, static_cast<unsigned>(month),
                                                      static_cast<unsigned>(day));
    std::int64_t ms = ((days * 24 + hour) * 60 + minute) * 60000LL + second * 1000LL + millis;
    ms -= offset_min * 60000LL;
    return Timestamp{ms};
}

/// Canonical form: "YYYY-MM-DDTHH:MM:SS.fffZ", always UTC, always milliseconds.
inline std::string format_iso8601(Timestamp t) {
    std::int64_t ms = t.ms_since_epoch;
    std::int64_t days = ms / 86400000LL;
    std::int64_t rem = ms % 86400000LL;
    if (rem < 0) {
        rem += 86400000LL;
        --days;
    }
    int y = 0;
    unsigned mo = 0, d = 0;
    detail::civil_from_days(days, y, mo, d);
    const int hour = static_cast<int>(rem / 3600000LL);
    const int minute = static_cast<int>((rem / 60000LL) % 60);
    const int second = static_cast<int>((rem / 1000LL) % 60);
    const int millis = static_cast<int>(rem % 1000LL);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", y, mo, d, hour,
                  minute, second, millis);
    return buf;
}

} // namespace flowlens
