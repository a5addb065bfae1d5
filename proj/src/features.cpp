#include "powerstate/features.hpp"

#include <algorithm>
#include <cmath>

#include "powerstate/csv.hpp"
#include "powerstate/timeparse.hpp"

namespace powerstate {

FeatureMatrix::FeatureMatrix(std::vector<std::string> feature_names,
                             std::vector<std::int64_t> timestamps, std::vector<double> values)
    : feature_names_(std::move(feature_names)),
      timestamps_(std::move(timestamps)),
      values_(std::move(values)) {
    if (values_.size() != timestamps_.size() * feature_names_.size())
        throw DataError("feature matrix storage does not match rows x features");
    for (double v : values_)
        if (is_missing(v)) throw DataError("feature matrix must not contain MISSING values");
    for (std::size_t i = 1; i < timestamps_.size(); ++i)
        if (timestamps_[i] <= timestamps_[i - 1])
            throw DataError("feature matrix timestamps must be strictly increasing");
}

FeatureMatrix FeatureMatrix::slice_time(std::int64_t start_ts, std::int64_t end_ts) const {
    auto lo = std::lower_bound(timestamps_.begin(), timestamps_.end(), start_ts);
    auto hi = std::upper_bound(timestamps_.begin(), timestamps_.end(), end_ts);
    std::size_t first = static_cast<std::size_t>(lo - timestamps_.begin());
    std::size_t last = static_cast<std::size_t>(hi - timestamps_.begin());
    std::size_t n = feature_names_.size();
    FeatureMatrix out(feature_names_,
                      {timestamps_.begin() + static_cast<std::ptrdiff_t>(first),
                       timestamps_.begin() + static_cast<std::ptrdiff_t>(last)},
                      {values_.begin() + static_cast<std::ptrdiff_t>(first * n),
                       values_.begin() + static_cast<std::ptrdiff_t>(last * n)});
    out.scaling_ = scaling_;
    return out;
}

const std::vector<int>& odd_harmonic_orders() {
    static const std::vector<int> orders = [] {
        std::vector<int> v;
        for (int o = 3; o <= 31; o += 2) v.push_back(o);
        return v;
    }();
    return orders;
}

std::vector<std::string> odd_harmonic_feature_names(PhaseMode mode) {
    std::vector<std::string> names;
    if (mode == PhaseMode::mean_of_phases) {
        for (int o : odd_harmonic_orders()) names.push_back("I_HR" + std::to_string(o));
    } else {
        for (char ph : {'A', 'B', 'C'})
            for (int o : odd_harmonic_orders())
                names.push_back(std::string(1, ph) + "I_HR" + std::to_string(o));
    }
    return names;
}

TimestampedFrame select_odd_current_harmonics(const TimestampedFrame& frame, PhaseMode mode) {
    if (mode == PhaseMode::concat_phases)
        return frame.select_channels(odd_harmonic_feature_names(PhaseMode::concat_phases));

    std::vector<int> a_idx, b_idx, c_idx;
    for (int o : odd_harmonic_orders()) {
        for (auto [prefix, idx] : {std::pair{"AI_HR", &a_idx}, {"BI_HR", &b_idx}, {"CI_HR", &c_idx}}) {
            std::string name = prefix + std::to_string(o);
            int i = frame.channel_index(name);
            if (i < 0) throw MissingColumnError(name);
            idx->push_back(i);
        }
    }
    std::vector<std::string> names = odd_harmonic_feature_names(PhaseMode::mean_of_phases);
    std::vector<double> values;
    values.reserve(frame.row_count() * names.size());
    for (std::size_t r = 0; r < frame.row_count(); ++r) {
        for (std::size_t f = 0; f < names.size(); ++f) {
            double a = frame.value(r, static_cast<std::size_t>(a_idx[f]));
            double b = frame.value(r, static_cast<std::size_t>(b_idx[f]));
            double c = frame.value(r, static_cast<std::size_t>(c_idx[f]));
            values.push_back((is_missing(a) || is_missing(b) || is_missing(c)) ? kMissing
                                                                               : (a + b + c) / 3.0);
        }
    }
    return TimestampedFrame::from_columns(std::move(names), frame.nominal_period_ms(),
                                          frame.timestamps(), std::move(values));
}

FeatureMatrix resample_mean(const TimestampedFrame& frame, std::int64_t period_ms,
                            std::vector<std::int64_t>* empty_windows) {
    if (period_ms <= 0) throw InvalidRangeError("resample period must be positive");
    if (empty_windows) empty_windows->clear();
    if (frame.empty()) throw EmptyWindowSpanError();

    const std::size_t n = frame.channel_count();
    const auto& ts = frame.timestamps();
    std::int64_t first_window = ts.front() / period_ms;
    if (ts.front() < 0 && ts.front() % period_ms != 0) --first_window;
    std::int64_t last_window = ts.back() / period_ms;
    if (ts.back() < 0 && ts.back() % period_ms != 0) --last_window;

    std::vector<std::int64_t> out_ts;
    std::vector<double> out_values;
    std::vector<double> sums(n);
    std::vector<std::size_t> counts(n);
    std::size_t row = 0;
    for (std::int64_t w = first_window; w <= last_window; ++w) {
        std::int64_t window_start = w * period_ms;
        std::int64_t window_end = window_start + period_ms;
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0u);
        bool any_row = false;
        while (row < ts.size() && ts[row] < window_end) {
            any_row = true;
            const double* r = frame.row(row);
            for (std::size_t c = 0; c < n; ++c) {
                if (!is_missing(r[c])) {
                    sums[c] += r[c];
                    ++counts[c];
                }
            }
            ++row;
        }
        if (!any_row) {
            if (empty_windows) empty_windows->push_back(window_start);
            continue;
        }
        out_ts.push_back(window_start);
        for (std::size_t c = 0; c < n; ++c) {
            if (counts[c] == 0)
                throw DataError("window at " + format_timestamp(window_start, kIsoTimestampFormat) +
                                " has only MISSING values for channel " + frame.channel_names()[c]);
            out_values.push_back(sums[c] / static_cast<double>(counts[c]));
        }
    }
    if (out_ts.empty()) throw EmptyWindowSpanError();
    return FeatureMatrix(frame.channel_names(), std::move(out_ts), std::move(out_values));
}

FeatureMatrix standardize(const FeatureMatrix& m) {
    const std::size_t rows = m.row_count();
    const std::size_t n = m.feature_count();
    if (rows == 0) throw DataError("cannot standardize an empty matrix");

    FeatureScaling scaling;
    scaling.mean.assign(n, 0.0);
    scaling.stddev.assign(n, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < n; ++c) scaling.mean[c] += m.value(r, c);
    for (std::size_t c = 0; c < n; ++c) scaling.mean[c] /= static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            double d = m.value(r, c) - scaling.mean[c];
            scaling.stddev[c] += d * d;
        }
    for (std::size_t c = 0; c < n; ++c)
        scaling.stddev[c] = std::sqrt(scaling.stddev[c] / static_cast<double>(rows));

    FeatureMatrix out = apply_standardization(m, scaling);
    return out;
}

FeatureMatrix apply_standardization(const FeatureMatrix& m, const FeatureScaling& scaling) {
    const std::size_t n = m.feature_count();
    if (scaling.mean.size() != n || scaling.stddev.size() != n)
        throw FeatureMismatchError("scaling dimension does not match feature count");
    std::vector<double> values;
    values.reserve(m.values().size());
    for (std::size_t r = 0; r < m.row_count(); ++r)
        for (std::size_t c = 0; c < n; ++c) {
            double v = m.value(r, c);
            if (scaling.stddev[c] > 0.0) v = (v - scaling.mean[c]) / scaling.stddev[c];
            values.push_back(v);
        }
    FeatureMatrix out(m.feature_names(), m.timestamps(), std::move(values));
    out.set_scaling(scaling);
    return out;
}

void write_feature_matrix_csv(const FeatureMatrix& m, const std::string& path,
                              const std::vector<std::string>& comment_header) {
    std::string out;
    for (const auto& line : comment_header) {
        out += "# ";
        out += line;
        out += '\n';
    }
    out += "timestamp";
    for (const auto& name : m.feature_names()) {
        out += ',';
        out += name;
    }
    out += '\n';
    for (std::size_t r = 0; r < m.row_count(); ++r) {
        out += format_timestamp(m.timestamps()[r], kIsoTimestampFormat);
        for (std::size_t c = 0; c < m.feature_count(); ++c) {
            out += ',';
            out += format_double(m.value(r, c));
        }
        out += '\n';
    }
    write_file_atomic(path, out);
}

}  // namespace powerstate
