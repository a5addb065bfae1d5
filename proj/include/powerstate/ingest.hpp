#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "powerstate/frame.hpp"

namespace powerstate {

/// Canonical ECD channel order: 27 numeric channels; with the timestamp
/// column that is the 28-field MiDAS electricity-consumption record.
const std::vector<std::string>& ecd_channels();

/// Canonical harmonics channel order: 192 numeric channels (31 orders x 3
/// phases x {current, voltage} plus 6 THD channels); 193 fields with the
/// timestamp column.
const std::vector<std::string>& harmonics_channels();

inline constexpr std::int64_t kEcdPeriodMs = 300;
inline constexpr std::int64_t kHarmonicsPeriodMs = 500;

struct GapReport {
    std::int64_t start_ts = 0;
    std::int64_t end_ts = 0;
    std::int64_t nominal_period_ms = 0;
    std::int64_t expected_count = 0;
    std::int64_t present_count = 0;
    double missing_fraction = 0.0;
    std::vector<std::pair<std::int64_t, std::int64_t>> gap_spans;
    std::size_t dropped_duplicates = 0;
};

/// Parse a MiDAS ECD CSV. Columns are matched by name (any order); rows are
/// sorted by timestamp; exact-duplicate timestamps keep the last occurrence.
/// Unparseable numeric cells become MISSING.
TimestampedFrame parse_ecd_csv(const std::string& path, const std::string& timestamp_format);

/// Parse a MiDAS harmonics CSV; same contract as parse_ecd_csv with the
/// 192-channel harmonics schema.
TimestampedFrame parse_harmonics_csv(const std::string& path, const std::string& timestamp_format);

/// Grid presence scan: a grid point is present when a row lies within
/// nominal_period/2 of it. expected = floor((end-start)/period) + 1.
GapReport detect_gaps(const TimestampedFrame& frame, std::int64_t nominal_period_ms,
                      std::int64_t start_ts, std::int64_t end_ts);

}  // namespace powerstate
