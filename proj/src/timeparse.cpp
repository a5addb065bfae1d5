#include "powerstate/timeparse.hpp"

#include <array>
#include <charconv>
#include <cstdio>

namespace powerstate {

namespace {

bool read_int(std::string_view text, std::size_t& pos, int max_digits, int& out) {
    int value = 0;
    int digits = 0;
    while (pos < text.size() && digits < max_digits && text[pos] >= '0' && text[pos] <= '9') {
        value = value * 10 + (text[pos] - '0');
        ++pos;
        ++digits;
    }
    if (digits == 0) return false;
    out = value;
    return true;
}

bool days_in_month_ok(int year, int month, int day) {
    static constexpr std::array<int, 12> lengths = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month < 1 || month > 12 || day < 1) return false;
    int limit = lengths[static_cast<std::size_t>(month - 1)];
    bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    if (month == 2 && leap) limit = 29;
    return day <= limit;
}

}  // namespace

// Civil-date conversions after Howard Hinnant's chrono algorithms.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& year, int& month, int& day) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    month = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    year = static_cast<int>(y + (month <= 2));
}

std::int64_t to_epoch_ms(const CivilTime& c) {
    std::int64_t days = days_from_civil(c.year, c.month, c.day);
    return days * kMillisPerDay + c.hour * kMillisPerHour + c.minute * kMillisPerMinute +
           c.second * kMillisPerSecond + c.millisecond;
}

CivilTime from_epoch_ms(std::int64_t ms) {
    CivilTime c;
    std::int64_t days = ms / kMillisPerDay;
    std::int64_t rem = ms % kMillisPerDay;
    if (rem < 0) {
        rem += kMillisPerDay;
        --days;
    }
    civil_from_days(days, c.year, c.month, c.day);
    c.hour = static_cast<int>(rem / kMillisPerHour);
    c.minute = static_cast<int>(rem % kMillisPerHour / kMillisPerMinute);
    c.second = static_cast<int>(rem % kMillisPerMinute / kMillisPerSecond);
    c.millisecond = static_cast<int>(rem % kMillisPerSecond);
    return c;
}

std::optional<std::int64_t> parse_timestamp(std::string_view text, std::string_view format) {
    if (format == kEpochMillisFormat) {
        std::int64_t value = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
        return value;
    }

    CivilTime c;
    std::size_t pos = 0;
    bool saw_seconds = false;
    for (std::size_t fi = 0; fi < format.size(); ++fi) {
        char fc = format[fi];
        if (fc == '%' && fi + 1 < format.size()) {
            char token = format[++fi];
            bool ok = true;
            switch (token) {
                case 'd': ok = read_int(text, pos, 2, c.day); break;
                case 'm': ok = read_int(text, pos, 2, c.month); break;
                case 'Y': ok = read_int(text, pos, 4, c.year); break;
                case 'H': ok = read_int(text, pos, 2, c.hour); break;
                case 'M': ok = read_int(text, pos, 2, c.minute); break;
                case 'S':
                    ok = read_int(text, pos, 2, c.second);
                    saw_seconds = true;
                    break;
                default: ok = pos < text.size() && text[pos++] == token; break;
            }
            if (!ok) return std::nullopt;
        } else {
            if (pos >= text.size() || text[pos] != fc) return std::nullopt;
            ++pos;
        }
    }
    // Optional millisecond fraction after the seconds field.
    if (saw_seconds && pos < text.size() && text[pos] == '.') {
        ++pos;
        int frac = 0;
        int digits = 0;
        while (pos < text.size() && digits < 3 && text[pos] >= '0' && text[pos] <= '9') {
            frac = frac * 10 + (text[pos] - '0');
            ++pos;
            ++digits;
        }
        if (digits == 0) return std::nullopt;
        while (digits < 3) {
            frac *= 10;
            ++digits;
        }
        c.millisecond = frac;
    }
    if (pos != text.size()) return std::nullopt;
    if (!days_in_month_ok(c.year, c.month, c.day)) return std::nullopt;
    if (c.hour > 23 || c.minute > 59 || c.second > 60) return std::nullopt;
    return to_epoch_ms(c);
}

std::string format_timestamp(std::int64_t ms, std::string_view format) {
    if (format == kEpochMillisFormat) return std::to_string(ms);

    CivilTime c = from_epoch_ms(ms);
    std::string out;
    out.reserve(format.size() + 8);
    char buf[8];
    for (std::size_t fi = 0; fi < format.size(); ++fi) {
        char fc = format[fi];
        if (fc == '%' && fi + 1 < format.size()) {
            char token = format[++fi];
            switch (token) {
                case 'd': std::snprintf(buf, sizeof buf, "%02d", c.day); out += buf; break;
                case 'm': std::snprintf(buf, sizeof buf, "%02d", c.month); out += buf; break;
                case 'Y': std::snprintf(buf, sizeof buf, "%04d", c.year); out += buf; break;
                case 'H': std::snprintf(buf, sizeof buf, "%02d", c.hour); out += buf; break;
                case 'M': std::snprintf(buf, sizeof buf, "%02d", c.minute); out += buf; break;
                case 'S':
                    std::snprintf(buf, sizeof buf, "%02d", c.second);
                    out += buf;
                    if (c.millisecond != 0) {
                        std::snprintf(buf, sizeof buf, ".%03d", c.millisecond);
                        out += buf;
                    }
                    break;
                default: out += token; break;
            }
        } else {
            out += fc;
        }
    }
    return out;
}

std::optional<std::int64_t> parse_iso_timestamp(std::string_view text) {
    if (auto full = parse_timestamp(text, kIsoTimestampFormat)) return full;
    if (auto date_only = parse_timestamp(text, "%Y-%m-%d")) return date_only;
    return std::nullopt;
}

std::string format_iso_date(std::int64_t ms) {
    return format_timestamp(day_start(ms), "%Y-%m-%d");
}

int weekday(std::int64_t ms) {
    std::int64_t days = ms / kMillisPerDay;
    if (ms < 0 && ms % kMillisPerDay != 0) --days;
    // Epoch day 0 (1970-01-01) was a Thursday.
    return static_cast<int>(((days % 7) + 7 + 3) % 7);
}

}  // namespace powerstate
