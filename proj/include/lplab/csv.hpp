// Small CSV helpers shared by the readers and writers.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lplab::csv {

// Shortest representation that parses back to the same double.
std::string format(double value);

std::vector<std::string_view> split(std::string_view line, char sep = ',');

// Parse helpers; `where` is used in the DecodeError message.
double parse_double(std::string_view field, const std::string& where);
std::int64_t parse_int(std::string_view field, const std::string& where);

// Checks a header line against the expected column list.
void expect_header(std::string_view line, std::string_view expected, const std::string& what);

}  // namespace lplab::csv
