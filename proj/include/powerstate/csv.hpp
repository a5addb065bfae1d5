#pragma once

#include <fstream>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "powerstate/frame.hpp"

namespace powerstate {

/// Line-at-a-time CSV reader. Holds one line in memory, never the file.
class CsvReader {
public:
    explicit CsvReader(const std::string& path);

    bool is_open() const { return stream_.is_open(); }

    /// Read the next record; returns false at end of file. Skips blank lines.
    bool next(std::vector<std::string>& fields);

    std::size_t line_number() const { return line_number_; }

private:
    std::ifstream stream_;
    std::string line_;
    std::size_t line_number_ = 0;
};

void split_csv_line(std::string_view line, std::vector<std::string>& fields);

/// Shortest decimal representation that round-trips the double.
std::string format_double(double v);

/// Parse a numeric cell; empty, "NaN", "nan" or garbage become MISSING.
double parse_numeric_cell(std::string_view cell);

/// Write a frame as CSV: header "Time Stamp,<channels...>", MISSING as empty
/// cell, timestamps rendered with the given format.
void write_frame_csv(const TimestampedFrame& frame, const std::string& path,
                     std::string_view timestamp_format,
                     const std::vector<std::string>& comment_header = {});

/// Write text to path atomically (temp file + rename).
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace powerstate
