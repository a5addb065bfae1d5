#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace powerstate {

/// All timestamps are UTC epoch milliseconds.
inline constexpr std::int64_t kMillisPerSecond = 1000;
inline constexpr std::int64_t kMillisPerMinute = 60 * kMillisPerSecond;
inline constexpr std::int64_t kMillisPerHour = 60 * kMillisPerMinute;
inline constexpr std::int64_t kMillisPerDay = 24 * kMillisPerHour;

/// Default text format for MiDAS-style CSVs: day-first, e.g. "02-01-2022 09:00:00".
/// A trailing ".mmm" fraction is always accepted after %S.
inline constexpr const char* kDefaultTimestampFormat = "%d-%m-%Y %H:%M:%S";

/// ISO-8601-style format used for all emitted artifacts.
inline constexpr const char* kIsoTimestampFormat = "%Y-%m-%d %H:%M:%S";

/// The special format name that reads/writes raw epoch milliseconds.
inline constexpr const char* kEpochMillisFormat = "epoch_ms";

struct CivilTime {
    int year = 1970;
    int month = 1;  // 1..12
    int day = 1;    // 1..31
    int hour = 0;
    int minute = 0;
    int second = 0;
    int millisecond = 0;
};

std::int64_t days_from_civil(int year, int month, int day);
void civil_from_days(std::int64_t days, int& year, int& month, int& day);

std::int64_t to_epoch_ms(const CivilTime& c);
CivilTime from_epoch_ms(std::int64_t ms);

/// Parse a timestamp cell against a format string supporting the tokens
/// %d %m %Y %H %M %S (other characters match literally). Returns nullopt on
/// mismatch. The format "epoch_ms" reads a raw integer.
std::optional<std::int64_t> parse_timestamp(std::string_view text, std::string_view format);

/// Inverse of parse_timestamp. Emits a ".mmm" fraction after %S only when
/// the millisecond part is nonzero.
std::string format_timestamp(std::int64_t ms, std::string_view format);

/// Parse "YYYY-MM-DD" or "YYYY-MM-DD HH:MM:SS[.mmm]"; used for config values.
std::optional<std::int64_t> parse_iso_timestamp(std::string_view text);

/// "YYYY-MM-DD" for the calendar day containing ms.
std::string format_iso_date(std::int64_t ms);

inline std::int64_t day_start(std::int64_t ms) {
    std::int64_t d = ms / kMillisPerDay;
    if (ms < 0 && ms % kMillisPerDay != 0) --d;
    return d * kMillisPerDay;
}

inline std::int64_t time_of_day_ms(std::int64_t ms) { return ms - day_start(ms); }

/// 0 = Monday ... 6 = Sunday.
int weekday(std::int64_t ms);

inline bool is_weekend(std::int64_t ms) { return weekday(ms) >= 5; }

}  // namespace powerstate
