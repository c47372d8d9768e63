#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rpr/errors.hpp"

namespace rpr::detail {

/// Fixed significant-digit formatting ("%.Ng"). Used by the CSV/PLY writers,
/// which promise byte-identical output for identical data.
inline std::string fmt_sig(double v, int significant_digits) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*g", significant_digits, v);
    return buf;
}

/// Shortest round-trip representation; parsing it back recovers the exact double.
inline std::string fmt_exact(double v) {
    char buf[48];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string trim(std::string_view s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

/// Strict double parser: the whole token must be consumed.
inline double parse_double(const std::string& token, const std::string& what) {
    const std::string t = trim(token);
    if (t.empty()) throw ValidationError(what + ": unparsable number (empty)");
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size())
        throw ValidationError(what + ": unparsable number '" + t + "'");
    return v;
}

/// Line-oriented `key = value` text with `#` comments. Returns pairs in file order.
inline std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
        pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;

        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        std::string stripped = trim(line);
        if (stripped.empty()) continue;

        auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ValidationError("malformed line (expected 'key = value'): '" + stripped + "'");
        std::string key = trim(std::string_view(stripped).substr(0, eq));
        std::string value = trim(std::string_view(stripped).substr(eq + 1));
        if (key.empty()) throw ValidationError("malformed line (empty key): '" + stripped + "'");
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

/// Split on a single-character separator, keeping empty fields.
inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        auto next = s.find(sep, pos);
        out.emplace_back(s.substr(pos, next == std::string_view::npos ? next : next - pos));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string to_hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace rpr::detail
