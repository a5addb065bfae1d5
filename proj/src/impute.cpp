#include "powerstate/impute.hpp"

#include <algorithm>

#include "powerstate/timeparse.hpp"

namespace powerstate {

namespace {

bool same_weekday_class(std::int64_t a, std::int64_t b) {
    return is_weekend(a) == is_weekend(b);
}

/// Value of `channel` in the frame row nearest to ts (within half a period),
/// or MISSING.
double frame_value_at(const TimestampedFrame& frame, std::int64_t ts, std::int64_t tolerance_ms,
                      std::size_t channel) {
    std::ptrdiff_t row = frame.nearest_row_within(ts, tolerance_ms);
    if (row < 0) return kMissing;
    return frame.value(static_cast<std::size_t>(row), channel);
}

}  // namespace

std::size_t ImputationResult::imputed_count(std::size_t channel) const {
    std::size_t n = 0;
    std::size_t channels = frame.channel_count();
    for (std::size_t r = 0; r < frame.row_count(); ++r)
        if (provenance[r * channels + channel] != CellProvenance::original) ++n;
    return n;
}

ImputationResult impute_same_timestamp(const TimestampedFrame& frame, const GridSpec& grid,
                                       const ImputationPolicy& policy) {
    if (grid.start_ts > grid.end_ts) throw InvalidRangeError("grid start is after end");
    if (grid.period_ms <= 0) throw InvalidRangeError("grid period must be positive");
    if (policy.max_lookback_days < 1 || policy.max_lookahead_days < 1)
        throw ConfigError("imputation horizons must be at least 1 day");
    if (policy.donors_per_side < 1) throw ConfigError("donors_per_side must be at least 1");

    const std::size_t channels = frame.channel_count();
    const std::int64_t tolerance = grid.period_ms / 2;
    const std::int64_t points = (grid.end_ts - grid.start_ts) / grid.period_ms + 1;

    std::vector<std::int64_t> timestamps;
    timestamps.reserve(static_cast<std::size_t>(points));
    std::vector<double> values;
    values.resize(static_cast<std::size_t>(points) * channels, kMissing);
    std::vector<CellProvenance> provenance(static_cast<std::size_t>(points) * channels,
                                           CellProvenance::original);

    // Pass 1: copy present cells, collect donors for missing ones.
    std::size_t imputed = 0;
    std::vector<std::int64_t> unfillable;
    for (std::int64_t i = 0; i < points; ++i) {
        std::int64_t ts = grid.start_ts + i * grid.period_ms;
        timestamps.push_back(ts);
        std::ptrdiff_t row = frame.nearest_row_within(ts, tolerance);
        for (std::size_t c = 0; c < channels; ++c) {
            std::size_t cell = static_cast<std::size_t>(i) * channels + c;
            if (row >= 0) {
                double v = frame.value(static_cast<std::size_t>(row), c);
                if (!is_missing(v)) {
                    values[cell] = v;
                    continue;
                }
            }
            // Missing: scan outward day by day, one side at a time, until the
            // requested donor count is reached or the horizon is exhausted.
            double donor_sum = 0.0;
            int donor_count = 0;
            int found_back = 0;
            for (int day = 1; day <= policy.max_lookback_days && found_back < policy.donors_per_side;
                 ++day) {
                std::int64_t donor_ts = ts - day * kMillisPerDay;
                if (policy.match_weekday_class && !same_weekday_class(donor_ts, ts)) continue;
                double v = frame_value_at(frame, donor_ts, tolerance, c);
                if (!is_missing(v)) {
                    donor_sum += v;
                    ++donor_count;
                    ++found_back;
                }
            }
            int found_fwd = 0;
            for (int day = 1; day <= policy.max_lookahead_days && found_fwd < policy.donors_per_side;
                 ++day) {
                std::int64_t donor_ts = ts + day * kMillisPerDay;
                if (policy.match_weekday_class && !same_weekday_class(donor_ts, ts)) continue;
                double v = frame_value_at(frame, donor_ts, tolerance, c);
                if (!is_missing(v)) {
                    donor_sum += v;
                    ++donor_count;
                    ++found_fwd;
                }
            }
            if (donor_count > 0) {
                values[cell] = donor_sum / donor_count;
                provenance[cell] = CellProvenance::donor;
                ++imputed;
            } else if (policy.fallback == ImputeFallback::leave_missing) {
                if (unfillable.empty() || unfillable.back() != ts) unfillable.push_back(ts);
            }
        }
    }

    if (!unfillable.empty()) throw UnfillableGapError(std::move(unfillable));

    // Pass 2: fallback for cells no donor could fill.
    if (policy.fallback != ImputeFallback::leave_missing) {
        for (std::size_t c = 0; c < channels; ++c) {
            std::size_t i = 0;
            const std::size_t n = static_cast<std::size_t>(points);
            while (i < n) {
                if (!is_missing(values[i * channels + c])) {
                    ++i;
                    continue;
                }
                std::size_t run_start = i;
                while (i < n && is_missing(values[i * channels + c])) ++i;
                std::size_t run_end = i;  // exclusive
                bool has_left = run_start > 0;
                bool has_right = run_end < n;
                double left = has_left ? values[(run_start - 1) * channels + c] : 0.0;
                double right = has_right ? values[run_end * channels + c] : 0.0;
                for (std::size_t j = run_start; j < run_end; ++j) {
                    double v;
                    if (has_left && has_right) {
                        if (policy.fallback == ImputeFallback::linear_interpolate) {
                            double t = static_cast<double>(j - run_start + 1) /
                                       static_cast<double>(run_end - run_start + 1);
                            v = left + (right - left) * t;
                        } else {  // carry_nearest; midpoint ties take the left
                            v = (j - run_start + 1 <= run_end - j) ? left : right;
                        }
                    } else if (has_left) {
                        v = left;
                    } else if (has_right) {
                        v = right;
                    } else {
                        v = 0.0;  // channel has no data anywhere
                    }
                    values[j * channels + c] = v;
                    provenance[j * channels + c] = CellProvenance::fallback;
                    ++imputed;
                }
            }
        }
    }

    ImputationResult result;
    result.frame = TimestampedFrame::from_columns(frame.channel_names(), grid.period_ms,
                                                  std::move(timestamps), std::move(values));
    result.provenance = std::move(provenance);
    result.imputed_cells = imputed;
    return result;
}

}  // namespace powerstate
