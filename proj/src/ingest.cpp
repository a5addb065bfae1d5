#include "powerstate/ingest.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "powerstate/csv.hpp"
#include "powerstate/timeparse.hpp"

namespace powerstate {

const std::vector<std::string>& ecd_channels() {
    static const std::vector<std::string> names = {
        "IA", "IB", "IC", "INCURRENT",
        "VA", "VB", "VC",
        "PFA", "PFB", "PFC", "PFT",
        "PhaseA", "PhaseB", "PhaseC",
        "ActivePA", "ActivePB", "ActivePC", "ActivePT",
        "ReactivePA", "ReactivePB", "ReactivePC", "ReactivePT",
        "ApparentPA", "ApparentPB", "ApparentPC", "ApparentPT",
        "FREQ"};
    return names;
}

const std::vector<std::string>& harmonics_channels() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        v.reserve(192);
        const char phases[] = {'A', 'B', 'C'};
        for (char q : {'I', 'V'}) {
            for (char ph : phases)
                for (int order = 2; order <= 32; ++order)
                    v.push_back(std::string(1, ph) + q + "_HR" + std::to_string(order));
            for (char ph : phases) v.push_back(std::string(1, ph) + q + "_THD");
        }
        return v;
    }();
    return names;
}

namespace {

const char* kTimestampNames[] = {"Time Stamp", "timestamp", "datetime"};

int find_timestamp_column(const std::vector<std::string>& header) {
    for (const char* name : kTimestampNames) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it != header.end()) return static_cast<int>(it - header.begin());
    }
    return -1;
}

/// Sort rows by timestamp (stable on input order) without materializing a
/// second copy of the data: permutation applied in place by cycle walking.
void sort_rows_in_place(std::vector<std::int64_t>& ts, std::vector<double>& values,
                        std::size_t width) {
    std::size_t rows = ts.size();
    std::vector<std::uint32_t> order(rows);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return ts[a] < ts[b]; });

    std::vector<double> row_buffer(width);
    for (std::size_t start = 0; start < rows; ++start) {
        if (order[start] == start) continue;
        std::int64_t ts_buffer = ts[start];
        std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(start * width), width,
                    row_buffer.begin());
        std::size_t hole = start;
        while (order[hole] != start) {
            std::size_t src = order[hole];
            ts[hole] = ts[src];
            std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(src * width), width,
                        values.begin() + static_cast<std::ptrdiff_t>(hole * width));
            order[hole] = static_cast<std::uint32_t>(hole);
            hole = src;
        }
        ts[hole] = ts_buffer;
        std::copy_n(row_buffer.begin(), width,
                    values.begin() + static_cast<std::ptrdiff_t>(hole * width));
        order[hole] = static_cast<std::uint32_t>(hole);
    }
}

/// Keep the last of each duplicate-timestamp run. Returns dropped count.
std::size_t dedupe_keep_last(std::vector<std::int64_t>& ts, std::vector<double>& values,
                             std::size_t width) {
    if (ts.size() < 2) return 0;
    std::size_t write = 0;
    for (std::size_t read = 0; read < ts.size(); ++read) {
        if (read + 1 < ts.size() && ts[read + 1] == ts[read]) continue;  // superseded
        if (write != read) {
            ts[write] = ts[read];
            std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(read * width), width,
                        values.begin() + static_cast<std::ptrdiff_t>(write * width));
        }
        ++write;
    }
    std::size_t dropped = ts.size() - write;
    ts.resize(write);
    values.resize(write * width);
    return dropped;
}

std::int64_t infer_nominal_period(const std::vector<std::int64_t>& ts, std::int64_t fallback) {
    if (ts.size() < 2) return fallback;
    std::map<std::int64_t, std::size_t> delta_counts;
    for (std::size_t i = 1; i < ts.size(); ++i) ++delta_counts[ts[i] - ts[i - 1]];
    std::int64_t best_delta = fallback;
    std::size_t best_count = 0;
    for (const auto& [delta, count] : delta_counts) {
        if (count > best_count) {  // map order makes ties pick the smaller delta
            best_count = count;
            best_delta = delta;
        }
    }
    return best_delta;
}

/// Upper bound on record count so the column vectors can be reserved once;
/// keeps peak memory at frame size + one line buffer for the big files.
std::size_t count_lines(const std::string& path) {
    std::ifstream stream(path, std::ios::binary);
    if (!stream) return 0;
    std::vector<char> buffer(1 << 20);
    std::size_t lines = 0;
    while (stream) {
        stream.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
        std::streamsize got = stream.gcount();
        for (std::streamsize i = 0; i < got; ++i)
            if (buffer[static_cast<std::size_t>(i)] == '\n') ++lines;
    }
    return lines + 1;
}

TimestampedFrame parse_schema_csv(const std::string& path, const std::string& timestamp_format,
                                  const std::vector<std::string>& schema,
                                  std::int64_t default_period_ms, int apparent_pt_channel) {
    std::size_t row_estimate = count_lines(path);
    CsvReader reader(path);
    std::vector<std::string> fields;
    if (!reader.next(fields)) throw EmptyFileError(path);

    int ts_col = find_timestamp_column(fields);
    if (ts_col < 0) throw MissingColumnError("Time Stamp");

    std::vector<int> column_of_channel(schema.size(), -1);
    for (std::size_t c = 0; c < schema.size(); ++c) {
        auto it = std::find(fields.begin(), fields.end(), schema[c]);
        if (it == fields.end()) throw MissingColumnError(schema[c]);
        column_of_channel[c] = static_cast<int>(it - fields.begin());
    }

    const std::size_t width = schema.size();
    std::vector<std::int64_t> timestamps;
    std::vector<double> values;
    timestamps.reserve(row_estimate);
    values.reserve(row_estimate * width);
    bool sorted = true;
    while (reader.next(fields)) {
        const std::string& cell =
            static_cast<std::size_t>(ts_col) < fields.size() ? fields[static_cast<std::size_t>(ts_col)] : std::string();
        auto ts = parse_timestamp(cell, timestamp_format);
        if (!ts) throw TimestampParseError(reader.line_number(), cell);
        if (!timestamps.empty() && *ts < timestamps.back()) sorted = false;
        timestamps.push_back(*ts);
        for (std::size_t c = 0; c < width; ++c) {
            std::size_t col = static_cast<std::size_t>(column_of_channel[c]);
            double v = col < fields.size() ? parse_numeric_cell(fields[col]) : kMissing;
            if (static_cast<int>(c) == apparent_pt_channel && !is_missing(v) && v < 0) v = kMissing;
            values.push_back(v);
        }
    }

    if (!sorted) sort_rows_in_place(timestamps, values, width);
    std::size_t dropped = dedupe_keep_last(timestamps, values, width);

    std::int64_t period = infer_nominal_period(timestamps, default_period_ms);
    auto frame = TimestampedFrame::from_columns(schema, period, std::move(timestamps),
                                                std::move(values));
    frame.set_dropped_duplicates(dropped);
    return frame;
}

}  // namespace

TimestampedFrame parse_ecd_csv(const std::string& path, const std::string& timestamp_format) {
    const auto& schema = ecd_channels();
    int apparent_pt = static_cast<int>(std::find(schema.begin(), schema.end(), "ApparentPT") -
                                       schema.begin());
    return parse_schema_csv(path, timestamp_format, schema, kEcdPeriodMs, apparent_pt);
}

TimestampedFrame parse_harmonics_csv(const std::string& path, const std::string& timestamp_format) {
    return parse_schema_csv(path, timestamp_format, harmonics_channels(), kHarmonicsPeriodMs, -1);
}

GapReport detect_gaps(const TimestampedFrame& frame, std::int64_t nominal_period_ms,
                      std::int64_t start_ts, std::int64_t end_ts) {
    if (start_ts > end_ts) throw InvalidRangeError("gap range start is after end");
    if (nominal_period_ms <= 0) throw InvalidRangeError("nominal period must be positive");

    GapReport report;
    report.start_ts = start_ts;
    report.end_ts = end_ts;
    report.nominal_period_ms = nominal_period_ms;
    report.expected_count = (end_ts - start_ts) / nominal_period_ms + 1;
    report.dropped_duplicates = frame.dropped_duplicates();

    const auto& ts = frame.timestamps();
    std::size_t row = 0;
    std::int64_t gap_start = 0;
    bool in_gap = false;
    for (std::int64_t i = 0; i < report.expected_count; ++i) {
        std::int64_t grid = start_ts + i * nominal_period_ms;
        // Advance to the first row that could still match this or a later point.
        while (row < ts.size() && 2 * (grid - ts[row]) > nominal_period_ms) ++row;
        bool present = row < ts.size() && 2 * (ts[row] - grid) <= nominal_period_ms &&
                       2 * (grid - ts[row]) <= nominal_period_ms;
        if (present) {
            ++report.present_count;
            if (in_gap) {
                report.gap_spans.emplace_back(gap_start, grid - nominal_period_ms);
                in_gap = false;
            }
        } else if (!in_gap) {
            gap_start = grid;
            in_gap = true;
        }
    }
    if (in_gap)
        report.gap_spans.emplace_back(gap_start,
                                      start_ts + (report.expected_count - 1) * nominal_period_ms);
    report.missing_fraction =
        1.0 - static_cast<double>(report.present_count) / static_cast<double>(report.expected_count);
    return report;
}

}  // namespace powerstate
