#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace microdata {

/// Shortest decimal representation that parses back to the same double
/// (std::to_chars shortest form). NaN prints as "nan", infinities as
/// "inf"/"-inf"; parse_double accepts all of them.
std::string format_double(double v);

/// Strict parse of a full token; throws NonFiniteInput-agnostic
/// std::invalid_argument on trailing garbage or empty input.
double parse_double(std::string_view token);

long long parse_int(std::string_view token);

std::vector<std::string_view> split_line(std::string_view line, char sep = ',');

} // namespace microdata
