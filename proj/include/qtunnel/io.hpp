#pragma once

// Text formatting shared by every CSV and key-value writer.

#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qtunnel {

/// Shortest decimal string that parses back to the same double.
std::string format_double(double x);

/// Strict parse of a whole field; throws Config naming `what` on failure.
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// `key = value` lines.
void write_key_values(std::ostream& out, const KeyValues& kv, std::string_view prefix = "");

}  // namespace qtunnel
