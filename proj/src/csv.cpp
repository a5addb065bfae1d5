#include "powerstate/csv.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <system_error>

#include "powerstate/timeparse.hpp"

namespace powerstate {

CsvReader::CsvReader(const std::string& path) : stream_(path) {
    if (!stream_.is_open()) throw DataError("cannot open file: " + path);
}

bool CsvReader::next(std::vector<std::string>& fields) {
    while (std::getline(stream_, line_)) {
        ++line_number_;
        if (!line_.empty() && line_.back() == '\r') line_.pop_back();
        if (line_.empty() || line_[0] == '#') continue;  // blank or comment header
        split_csv_line(line_, fields);
        return true;
    }
    return false;
}

void split_csv_line(std::string_view line, std::vector<std::string>& fields) {
    fields.clear();
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            fields.emplace_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

double parse_numeric_cell(std::string_view cell) {
    // Trim surrounding spaces; machine-written files occasionally pad cells.
    std::size_t b = 0;
    std::size_t e = cell.size();
    while (b < e && (cell[b] == ' ' || cell[b] == '\t')) ++b;
    while (e > b && (cell[e - 1] == ' ' || cell[e - 1] == '\t')) --e;
    if (b == e) return kMissing;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data() + b, cell.data() + e, value);
    if (ec != std::errc() || ptr != cell.data() + e) return kMissing;
    return value;
}

void write_frame_csv(const TimestampedFrame& frame, const std::string& path,
                     std::string_view timestamp_format,
                     const std::vector<std::string>& comment_header) {
    std::string out;
    out.reserve(frame.row_count() * (frame.channel_count() * 8 + 24) + 256);
    for (const auto& line : comment_header) {
        out += "# ";
        out += line;
        out += '\n';
    }
    out += "Time Stamp";
    for (const auto& name : frame.channel_names()) {
        out += ',';
        out += name;
    }
    out += '\n';
    for (std::size_t r = 0; r < frame.row_count(); ++r) {
        out += format_timestamp(frame.timestamps()[r], timestamp_format);
        for (std::size_t c = 0; c < frame.channel_count(); ++c) {
            out += ',';
            double v = frame.value(r, c);
            if (!is_missing(v)) out += format_double(v);
        }
        out += '\n';
    }
    write_file_atomic(path, out);
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream stream(tmp, std::ios::binary | std::ios::trunc);
        if (!stream) throw DataError("cannot write file: " + tmp.string());
        stream.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!stream) throw DataError("short write: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw DataError("cannot rename " + tmp.string() + " to " + path + ": " + ec.message());
}

}  // namespace powerstate
