#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace gascope {

// Fixed-point scales used at the data layer. Monetary and share quantities
// are stored as scaled integers so sum/equality invariants hold exactly;
// floating point enters only in the estimation layer.
using i64 = std::int64_t;
using i128 = __int128;

inline constexpr i64 USD_SCALE = 1'000'000;          // 6-dp USD (micro-USD)
inline constexpr i64 FRAC_SCALE = 1'000'000'000;     // 9-dp fractions (nano)
inline constexpr i128 WEI_PER_ETH = i128(1'000'000'000) * i128(1'000'000'000);

// Decimal string -> integer scaled by 10^scale_dp, rounding half away from
// zero at the last kept digit. Returns nullopt on malformed input or overflow
// of the 128-bit accumulator.
std::optional<i128> parse_scaled_decimal(const std::string& text, int scale_dp);

// Narrowing helper: nullopt unless v fits in int64.
std::optional<i64> to_i64(i128 v);

// Plain integer parse (optional leading sign), nullopt on junk or overflow.
std::optional<i64> parse_int(const std::string& text);

std::string i128_to_string(i128 v);
std::optional<i128> i128_from_string(const std::string& text);

// Scaled integer -> decimal string with exactly scale_dp fractional digits.
std::string format_scaled(i64 value, int scale_dp);

// Whitespace trim; CSV fields come in ragged.
std::string trim(const std::string& s);

}  // namespace gascope
