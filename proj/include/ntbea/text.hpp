#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

namespace ntbea {

// Shortest round-trip representation (std::to_chars default form).
// Integral doubles come out as "3" / "-1"; otherwise "0.1", "1e-07", etc.
inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

inline std::string join(const std::vector<std::string>& parts, char sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.push_back(sep);
        out += parts[i];
    }
    return out;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            return out;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

// RFC4180-style quoting; also quotes ';' since label vectors join on it.
inline std::string csv_field(std::string_view s) {
    bool needs_quote = s.find_first_of(",;\"\n\r") != std::string_view::npos;
    if (!needs_quote) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace ntbea
