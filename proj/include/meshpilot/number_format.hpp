#pragma once

#include <charconv>
#include <string>

namespace meshpilot {

/// Shortest decimal form that round-trips the double: 0.1 -> "0.1", 2 -> "2".
inline std::string format_shortest(double value) {
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, result.ptr);
}

/// Shortest round-trip form, but integral values keep a decimal point:
/// 1 -> "1.0". Used for coordinates, which read as [x, y, z] reals.
inline std::string format_decimal(double value) {
    std::string text = format_shortest(value);
    if (text.find('.') == std::string::npos && text.find('e') == std::string::npos &&
        text.find("inf") == std::string::npos && text.find("nan") == std::string::npos) {
        text += ".0";
    }
    return text;
}

}  // namespace meshpilot
