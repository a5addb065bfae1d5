#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "powerstate/errors.hpp"

namespace powerstate {

/// Missing values are carried as quiet NaN and written out as empty cells.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

/// A time-indexed table of named numeric channels. Timestamps are strictly
/// increasing epoch milliseconds; rows are dense with per-cell MISSING.
/// Immutable in spirit: pipeline stages build new frames rather than edit.
class TimestampedFrame {
public:
    TimestampedFrame() = default;

    TimestampedFrame(std::vector<std::string> channel_names, std::int64_t nominal_period_ms)
        : channel_names_(std::move(channel_names)), nominal_period_ms_(nominal_period_ms) {}

    const std::vector<std::string>& channel_names() const { return channel_names_; }
    const std::vector<std::int64_t>& timestamps() const { return timestamps_; }
    std::int64_t nominal_period_ms() const { return nominal_period_ms_; }
    void set_nominal_period_ms(std::int64_t p) { nominal_period_ms_ = p; }

    std::size_t row_count() const { return timestamps_.size(); }
    std::size_t channel_count() const { return channel_names_.size(); }
    bool empty() const { return timestamps_.empty(); }

    double value(std::size_t row, std::size_t channel) const {
        return values_[row * channel_names_.size() + channel];
    }
    void set_value(std::size_t row, std::size_t channel, double v) {
        values_[row * channel_names_.size() + channel] = v;
    }

    const double* row(std::size_t r) const { return values_.data() + r * channel_names_.size(); }
    const std::vector<double>& values() const { return values_; }

    /// Index of a channel by exact name, or -1.
    int channel_index(const std::string& name) const {
        for (std::size_t i = 0; i < channel_names_.size(); ++i)
            if (channel_names_[i] == name) return static_cast<int>(i);
        return -1;
    }

    /// Append a row; timestamps must arrive strictly increasing.
    void append_row(std::int64_t ts, const std::vector<double>& row_values) {
        if (row_values.size() != channel_names_.size())
            throw DataError("row width " + std::to_string(row_values.size()) +
                            " does not match channel count " + std::to_string(channel_names_.size()));
        if (!timestamps_.empty() && ts <= timestamps_.back())
            throw DataError("timestamps must be strictly increasing");
        timestamps_.push_back(ts);
        values_.insert(values_.end(), row_values.begin(), row_values.end());
    }

    /// Duplicate timestamps dropped at parse time (last occurrence kept).
    std::size_t dropped_duplicates() const { return dropped_duplicates_; }
    void set_dropped_duplicates(std::size_t n) { dropped_duplicates_ = n; }

    /// Adopt pre-built column storage without copying. timestamps must be
    /// strictly increasing and values row-major with |names| columns.
    static TimestampedFrame from_columns(std::vector<std::string> channel_names,
                                         std::int64_t nominal_period_ms,
                                         std::vector<std::int64_t> timestamps,
                                         std::vector<double> values);

    /// Nearest row to ts, or -1 for an empty frame.
    std::ptrdiff_t nearest_row(std::int64_t ts) const;

    /// Nearest row within tolerance_ms of ts, or -1. Ties go to the earlier row.
    std::ptrdiff_t nearest_row_within(std::int64_t ts, std::int64_t tolerance_ms) const;

    /// New frame with the given channels, in the given order.
    TimestampedFrame select_channels(const std::vector<std::string>& names) const;

    /// New frame restricted to timestamps in [start_ts, end_ts].
    TimestampedFrame slice_time(std::int64_t start_ts, std::int64_t end_ts) const;

private:
    std::vector<std::string> channel_names_;
    std::vector<std::int64_t> timestamps_;
    std::vector<double> values_;  // row-major, rows x channels
    std::int64_t nominal_period_ms_ = 0;
    std::size_t dropped_duplicates_ = 0;
};

bool frames_identical(const TimestampedFrame& a, const TimestampedFrame& b);

}  // namespace powerstate
