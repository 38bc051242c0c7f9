#include "polnet/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace polnet {

std::optional<std::size_t> utf8_invalid_at(const std::string& bytes) {
    const auto* s = reinterpret_cast<const unsigned char*>(bytes.data());
    std::size_t n = bytes.size();
    std::size_t i = 0;
    while (i < n) {
        unsigned char c = s[i];
        std::size_t len;
        if (c < 0x80) {
            len = 1;
        } else if ((c & 0xE0) == 0xC0) {
            len = 2;
            if (c < 0xC2) return i;  // overlong
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            if (c > 0xF4) return i;  // beyond U+10FFFF
        } else {
            return i;
        }
        if (i + len > n) return i;
        for (std::size_t k = 1; k < len; ++k) {
            if ((s[i + k] & 0xC0) != 0x80) return i;
        }
        i += len;
    }
    return std::nullopt;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path + ": cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string content = ss.str();
    if (auto bad = utf8_invalid_at(content)) {
        throw DataError(path + ": invalid UTF-8 at byte offset " + std::to_string(*bad));
    }
    return content;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(path + ": cannot open for writing");
    out << content;
    if (!out) throw DataError(path + ": write failed");
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

std::string join_csv(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += fields[i];
    }
    return out;
}

CsvReader::CsvReader(const std::string& path, const std::vector<std::string>& header)
    : path_(path), content_(read_text_file(path)), n_cols_(header.size()) {
    // header line
    std::size_t eol = content_.find('\n');
    std::string first = content_.substr(0, eol == std::string::npos ? content_.size() : eol);
    if (!first.empty() && first.back() == '\r') first.pop_back();
    line_ = 1;
    auto fields = split_csv_line(first);
    if (fields != header) {
        throw DataError(path_ + ":1: expected header '" + join_csv(header) + "', got '" + first + "'");
    }
    pos_ = (eol == std::string::npos) ? content_.size() : eol + 1;
}

std::optional<std::vector<std::string>> CsvReader::next() {
    while (pos_ < content_.size()) {
        std::size_t eol = content_.find('\n', pos_);
        std::size_t end = (eol == std::string::npos) ? content_.size() : eol;
        std::string line = content_.substr(pos_, end - pos_);
        pos_ = (eol == std::string::npos) ? content_.size() : eol + 1;
        ++line_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != n_cols_) {
            throw DataError(path_ + ":" + std::to_string(line_) + ": expected " +
                            std::to_string(n_cols_) + " fields, got " + std::to_string(fields.size()));
        }
        return fields;
    }
    return std::nullopt;
}

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    // find the shortest representation that round-trips
    for (int prec = 1; prec < 17; ++prec) {
        char tmp[64];
        std::snprintf(tmp, sizeof(tmp), "%.*g", prec, x);
        double back;
        auto [p, ec] = std::from_chars(tmp, tmp + std::char_traits<char>::length(tmp), back);
        (void)p;
        if (ec == std::errc() && back == x) return tmp;
    }
    return buf;
}

long parse_long(const std::string& s, const std::string& what, const std::string& file, int line) {
    long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw DataError(file + ":" + std::to_string(line) + ": malformed " + what + " '" + s + "'");
    }
    return v;
}

double parse_double(const std::string& s, const std::string& what, const std::string& file, int line) {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw DataError(file + ":" + std::to_string(line) + ": malformed " + what + " '" + s + "'");
    }
    return v;
}

}  // namespace polnet
