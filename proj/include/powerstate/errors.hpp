#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace powerstate {

/// Base class for all library errors. The category drives CLI exit codes.
class Error : public std::runtime_error {
public:
    enum class Category { config, data, numeric };

    Error(Category category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    Category category() const { return category_; }

private:
    Category category_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error(Category::config, message) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& message) : Error(Category::data, message) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& message) : Error(Category::numeric, message) {}
};

class MissingColumnError : public DataError {
public:
    explicit MissingColumnError(const std::string& column)
        : DataError("missing required column: " + column), column_(column) {}

    const std::string& column() const { return column_; }

private:
    std::string column_;
};

class TimestampParseError : public DataError {
public:
    TimestampParseError(std::size_t row, const std::string& cell)
        : DataError("unparseable timestamp at data row " + std::to_string(row) + ": \"" + cell + "\""),
          row_(row) {}

    std::size_t row() const { return row_; }

private:
    std::size_t row_;
};

class EmptyFileError : public DataError {
public:
    explicit EmptyFileError(const std::string& path) : DataError("empty file: " + path) {}
};

class InvalidRangeError : public ConfigError {
public:
    explicit InvalidRangeError(const std::string& message) : ConfigError(message) {}
};

/// Raised by imputation when fallback is leave-missing and some grid cells
/// have no same-time donor within the horizon.
class UnfillableGapError : public DataError {
public:
    explicit UnfillableGapError(std::vector<std::int64_t> timestamps)
        : DataError("no donor found for " + std::to_string(timestamps.size()) +
                    " grid timestamp(s) and fallback is leave-missing"),
          timestamps_(std::move(timestamps)) {}

    const std::vector<std::int64_t>& timestamps() const { return timestamps_; }

private:
    std::vector<std::int64_t> timestamps_;
};

class TooFewSamplesError : public ConfigError {
public:
    TooFewSamplesError(std::size_t rows, std::size_t k)
        : ConfigError("k-means needs at least k samples: rows=" + std::to_string(rows) +
                      " k=" + std::to_string(k)) {}
};

class SingleClusterError : public DataError {
public:
    SingleClusterError() : DataError("silhouette score requires at least 2 distinct labels") {}
};

class FeatureMismatchError : public DataError {
public:
    explicit FeatureMismatchError(const std::string& message) : DataError(message) {}
};

class SingleClassError : public DataError {
public:
    SingleClassError() : DataError("training labels contain a single class") {}
};

class LengthMismatchError : public DataError {
public:
    LengthMismatchError(std::size_t a, std::size_t b)
        : DataError("assignment lengths differ: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

class EmptyWindowSpanError : public DataError {
public:
    EmptyWindowSpanError() : DataError("resampling produced no non-empty windows") {}
};

class InvalidProfileError : public ConfigError {
public:
    explicit InvalidProfileError(const std::string& message) : ConfigError(message) {}
};

}  // namespace powerstate
