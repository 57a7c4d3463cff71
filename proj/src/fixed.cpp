#include "gascope/fixed.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

namespace gascope {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::optional<i128> parse_scaled_decimal(const std::string& text, int scale_dp) {
    const std::string t = trim(text);
    if (t.empty()) return std::nullopt;

    std::size_t i = 0;
    bool neg = false;
    if (t[i] == '+' || t[i] == '-') {
        neg = (t[i] == '-');
        ++i;
    }
    if (i == t.size()) return std::nullopt;

    constexpr i128 LIMIT = i128(1) << 120;  // headroom guard for the accumulator
    i128 acc = 0;
    bool any_digit = false;
    int frac_seen = -1;  // -1 until the decimal point
    int round_digit = -1;

    for (; i < t.size(); ++i) {
        const char c = t[i];
        if (c == '.') {
            if (frac_seen >= 0) return std::nullopt;
            frac_seen = 0;
            continue;
        }
        if (c == ',' || c == '_') continue;  // thousands separators in exports
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
        any_digit = true;
        if (frac_seen >= 0 && frac_seen >= scale_dp) {
            if (round_digit < 0) round_digit = c - '0';
            continue;  // beyond kept precision
        }
        if (acc > LIMIT / 10) return std::nullopt;
        acc = acc * 10 + (c - '0');
        if (frac_seen >= 0) ++frac_seen;
    }
    if (!any_digit) return std::nullopt;

    int missing = scale_dp - (frac_seen < 0 ? 0 : frac_seen);
    for (int k = 0; k < missing; ++k) {
        if (acc > LIMIT / 10) return std::nullopt;
        acc *= 10;
    }
    if (round_digit >= 5) acc += 1;
    return neg ? -acc : acc;
}

std::optional<i64> to_i64(i128 v) {
    if (v > std::numeric_limits<i64>::max() || v < std::numeric_limits<i64>::min())
        return std::nullopt;
    return static_cast<i64>(v);
}

std::optional<i64> parse_int(const std::string& text) {
    auto v = parse_scaled_decimal(text, 0);
    if (!v) return std::nullopt;
    return to_i64(*v);
}

std::string i128_to_string(i128 v) {
    if (v == 0) return "0";
    const bool neg = v < 0;
    unsigned __int128 u = neg ? static_cast<unsigned __int128>(-(v + 1)) + 1
                              : static_cast<unsigned __int128>(v);
    std::string out;
    while (u > 0) {
        out.push_back(static_cast<char>('0' + static_cast<int>(u % 10)));
        u /= 10;
    }
    if (neg) out.push_back('-');
    std::reverse(out.begin(), out.end());
    return out;
}

std::optional<i128> i128_from_string(const std::string& text) {
    return parse_scaled_decimal(text, 0);
}

std::string format_scaled(i64 value, int scale_dp) {
    i64 scale = 1;
    for (int k = 0; k < scale_dp; ++k) scale *= 10;
    const bool neg = value < 0;
    const i64 a = neg ? -value : value;
    std::string whole = std::to_string(a / scale);
    if (scale_dp == 0) return (neg ? "-" : "") + whole;
    std::string frac = std::to_string(a % scale);
    frac.insert(frac.begin(), scale_dp - static_cast<int>(frac.size()), '0');
    return (neg ? "-" : "") + whole + "." + frac;
}

}  // namespace gascope
