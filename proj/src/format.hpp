#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <system_error>

#include "conetomo/errors.hpp"

namespace conetomo::detail {

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Strict decimal literal parse; the whole string must be consumed.
inline double parse_number(std::string_view text)
{
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    if (first != last && *first == '+')
        ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || first == last || !std::isfinite(v))
        throw DomainError("not a decimal number: '" + std::string(text) + "'");
    return v;
}

}  // namespace conetomo::detail
