#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace polnet {

/// Error thrown by loaders on malformed input. Messages carry the file,
/// line number and, for encoding failures, the byte offset.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Validates UTF-8; returns the byte offset of the first invalid sequence,
/// or nullopt if the buffer is valid.
std::optional<std::size_t> utf8_invalid_at(const std::string& bytes);

/// Reads a whole file, rejecting non-UTF-8 content with a position-bearing
/// DataError.
std::string read_text_file(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);

/// Minimal comma-separated table: no quoting, one record per line, CRLF
/// tolerated. `header` names the expected columns; a mismatched header or a
/// row with the wrong field count raises DataError with the line number.
class CsvReader {
public:
    CsvReader(const std::string& path, const std::vector<std::string>& header);

    /// Returns the next record, or nullopt at end of file. Blank lines are
    /// skipped.
    std::optional<std::vector<std::string>> next();

    int line_number() const { return line_; }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::string content_;
    std::size_t pos_ = 0;
    int line_ = 0;
    std::size_t n_cols_;
};

/// Splits one CSV line on commas (no quoting).
std::vector<std::string> split_csv_line(const std::string& line);

std::string join_csv(const std::vector<std::string>& fields);

/// Fixed-format float for reproducible CSV output (shortest round-trip).
std::string format_double(double x);

long parse_long(const std::string& s, const std::string& what, const std::string& file, int line);
double parse_double(const std::string& s, const std::string& what, const std::string& file, int line);

}  // namespace polnet
