#pragma once

#include "fvcm/errors.hpp"

#include <charconv>
#include <limits>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace fvcm {

/// Shortest representation that round-trips the double exactly.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& context) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    while (first != last && (*first == ' ' || *first == '\t')) ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{}) {
        throw ParseError(context + ": cannot parse number from '" + std::string(s) + "'");
    }
    for (const char* c = res.ptr; c != last; ++c) {
        if (*c != ' ' && *c != '\t' && *c != '\r') {
            throw ParseError(context + ": trailing characters in '" + std::string(s) + "'");
        }
    }
    return v;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            std::string_view f = line.substr(start, i - start);
            while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.remove_suffix(1);
            fields.emplace_back(f);
            start = i + 1;
        }
    }
    return fields;
}

inline std::vector<double> parse_double_list(std::string_view s, const std::string& context) {
    std::vector<double> out;
    for (const auto& f : split_csv_line(s)) out.push_back(parse_double(f, context));
    return out;
}

}  // namespace fvcm
