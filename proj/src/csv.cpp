#include "lplab/csv.hpp"

#include <array>
#include <charconv>

#include "lplab/errors.hpp"

namespace lplab::csv {

std::string format(double value) {
    std::array<char, 32> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), end);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

double parse_double(std::string_view field, const std::string& where) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw DecodeError(where + ": cannot parse '" + std::string(field) + "' as a number");
    }
    return value;
}

std::int64_t parse_int(std::string_view field, const std::string& where) {
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw DecodeError(where + ": cannot parse '" + std::string(field) + "' as an integer");
    }
    return value;
}

void expect_header(std::string_view line, std::string_view expected, const std::string& what) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line != expected) {
        throw DecodeError(what + ": expected header '" + std::string(expected) + "', got '" + std::string(line) + "'");
    }
}

}  // namespace lplab::csv
