#include "qtunnel/io.hpp"

#include "qtunnel/error.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace qtunnel {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string_view trim(std::string_view s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        out.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view text, std::string_view what) {
    text = trim(text);
    if (text == "nan") return std::nan("");
    if (text == "inf") return INFINITY;
    if (text == "-inf") return -INFINITY;
    double x = 0.0;
    auto first = text.data();
    if (!text.empty() && text.front() == '+') ++first;
    auto res = std::from_chars(first, text.data() + text.size(), x);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw Error(ErrorCode::Config, "invalid number '" + std::string(text) + "' for " + std::string(what));
    return x;
}

long long parse_int(std::string_view text, std::string_view what) {
    text = trim(text);
    long long x = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), x);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw Error(ErrorCode::Config, "invalid integer '" + std::string(text) + "' for " + std::string(what));
    return x;
}

void write_key_values(std::ostream& out, const KeyValues& kv, std::string_view prefix) {
    for (const auto& [k, v] : kv) out << prefix << k << " = " << v << '\n';
}

}  // namespace qtunnel
