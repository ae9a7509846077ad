#pragma once

#include <charconv>
#include <string>

namespace speq {

/// Shortest decimal representation that round-trips the double exactly.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace speq
