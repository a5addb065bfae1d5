#include "powerstate/frame.hpp"

#include <algorithm>
#include <cstdlib>

namespace powerstate {

std::ptrdiff_t TimestampedFrame::nearest_row(std::int64_t ts) const {
    if (timestamps_.empty()) return -1;
    auto it = std::lower_bound(timestamps_.begin(), timestamps_.end(), ts);
    if (it == timestamps_.end()) return static_cast<std::ptrdiff_t>(timestamps_.size()) - 1;
    if (it == timestamps_.begin()) return 0;
    auto prev = it - 1;
    // Tie goes to the earlier row.
    if (ts - *prev <= *it - ts) return prev - timestamps_.begin();
    return it - timestamps_.begin();
}

std::ptrdiff_t TimestampedFrame::nearest_row_within(std::int64_t ts, std::int64_t tolerance_ms) const {
    std::ptrdiff_t r = nearest_row(ts);
    if (r < 0) return -1;
    std::int64_t diff = timestamps_[static_cast<std::size_t>(r)] - ts;
    if (diff < 0) diff = -diff;
    return diff <= tolerance_ms ? r : -1;
}

TimestampedFrame TimestampedFrame::select_channels(const std::vector<std::string>& names) const {
    std::vector<int> indices;
    indices.reserve(names.size());
    for (const auto& name : names) {
        int idx = channel_index(name);
        if (idx < 0) throw MissingColumnError(name);
        indices.push_back(idx);
    }
    TimestampedFrame out(names, nominal_period_ms_);
    out.dropped_duplicates_ = dropped_duplicates_;
    out.timestamps_ = timestamps_;
    out.values_.resize(timestamps_.size() * names.size());
    for (std::size_t r = 0; r < timestamps_.size(); ++r)
        for (std::size_t c = 0; c < indices.size(); ++c)
            out.values_[r * names.size() + c] = value(r, static_cast<std::size_t>(indices[c]));
    return out;
}

TimestampedFrame TimestampedFrame::slice_time(std::int64_t start_ts, std::int64_t end_ts) const {
    TimestampedFrame out(channel_names_, nominal_period_ms_);
    auto lo = std::lower_bound(timestamps_.begin(), timestamps_.end(), start_ts);
    auto hi = std::upper_bound(timestamps_.begin(), timestamps_.end(), end_ts);
    std::size_t first = static_cast<std::size_t>(lo - timestamps_.begin());
    std::size_t last = static_cast<std::size_t>(hi - timestamps_.begin());
    out.timestamps_.assign(timestamps_.begin() + static_cast<std::ptrdiff_t>(first),
                           timestamps_.begin() + static_cast<std::ptrdiff_t>(last));
    out.values_.assign(values_.begin() + static_cast<std::ptrdiff_t>(first * channel_count()),
                       values_.begin() + static_cast<std::ptrdiff_t>(last * channel_count()));
    return out;
}

TimestampedFrame TimestampedFrame::from_columns(std::vector<std::string> channel_names,
                                                std::int64_t nominal_period_ms,
                                                std::vector<std::int64_t> timestamps,
                                                std::vector<double> values) {
    if (values.size() != timestamps.size() * channel_names.size())
        throw DataError("column storage size does not match rows x channels");
    for (std::size_t i = 1; i < timestamps.size(); ++i)
        if (timestamps[i] <= timestamps[i - 1])
            throw DataError("timestamps must be strictly increasing");
    TimestampedFrame frame;
    frame.channel_names_ = std::move(channel_names);
    frame.nominal_period_ms_ = nominal_period_ms;
    frame.timestamps_ = std::move(timestamps);
    frame.values_ = std::move(values);
    return frame;
}

bool frames_identical(const TimestampedFrame& a, const TimestampedFrame& b) {
    if (a.channel_names() != b.channel_names()) return false;
    if (a.timestamps() != b.timestamps()) return false;
    const auto& av = a.values();
    const auto& bv = b.values();
    if (av.size() != bv.size()) return false;
    for (std::size_t i = 0; i < av.size(); ++i) {
        bool am = is_missing(av[i]);
        bool bm = is_missing(bv[i]);
        if (am != bm) return false;
        if (!am && av[i] != bv[i]) return false;
    }
    return true;
}

}  // namespace powerstate
