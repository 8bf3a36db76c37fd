#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace smadrl {

// Shortest representation that round-trips; stable across runs.
std::string format_double(double value);

double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);

}  // namespace smadrl
