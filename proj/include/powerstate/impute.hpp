#pragma once

#include <cstdint>
#include <vector>

#include "powerstate/frame.hpp"

namespace powerstate {

enum class ImputeFallback { linear_interpolate, carry_nearest, leave_missing };

/// Same-timestamp cross-day mean imputation: a missing grid cell is filled
/// with the mean of the nearest earlier-day and later-day values at the same
/// time of day, scanning outward one day at a time.
struct ImputationPolicy {
    int max_lookback_days = 7;
    int max_lookahead_days = 7;
    ImputeFallback fallback = ImputeFallback::linear_interpolate;
    int donors_per_side = 1;
    /// When set, donors must share the target's weekday class (Mon-Fri vs
    /// Sat/Sun). Off by default.
    bool match_weekday_class = false;
};

enum class CellProvenance : std::uint8_t { original = 0, donor = 1, fallback = 2 };

struct ImputationResult {
    TimestampedFrame frame;
    /// rows x channels, parallel to frame.values().
    std::vector<CellProvenance> provenance;
    std::size_t imputed_cells = 0;

    CellProvenance provenance_at(std::size_t row, std::size_t channel) const {
        return provenance[row * frame.channel_count() + channel];
    }
    std::size_t imputed_count(std::size_t channel) const;
};

struct GridSpec {
    std::int64_t start_ts = 0;
    std::int64_t end_ts = 0;
    std::int64_t period_ms = 0;
};

/// Produce a frame with exactly one row per grid point of [start, end] at the
/// given period. Present cells are copied untouched; missing cells are filled
/// from same-time-of-day donors, then the fallback. With the leave-missing
/// fallback, cells that no donor can fill raise UnfillableGapError.
ImputationResult impute_same_timestamp(const TimestampedFrame& frame, const GridSpec& grid,
                                       const ImputationPolicy& policy = {});

}  // namespace powerstate
