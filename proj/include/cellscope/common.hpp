#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace cellscope {

using i128 = __int128;
using u128 = unsigned __int128;

// Saturation sentinels used as +/- infinity by the interval domain.
// All finite quantities handled by the analyzer (64-bit integer values,
// byte offsets, sums of products of those) fit strictly inside.
constexpr i128 kNegInf = std::numeric_limits<i128>::min();
constexpr i128 kPosInf = std::numeric_limits<i128>::max();

inline bool is_finite(i128 v) { return v != kNegInf && v != kPosInf; }

inline i128 sat_neg(i128 a) {
    if (a == kNegInf) return kPosInf;
    if (a == kPosInf) return kNegInf;
    return -a;
}

inline i128 sat_add(i128 a, i128 b) {
    if (a == kNegInf || b == kNegInf) return kNegInf;
    if (a == kPosInf || b == kPosInf) return kPosInf;
    if (b > 0 && a > kPosInf - 1 - b) return kPosInf;
    if (b < 0 && a < kNegInf + 1 - b) return kNegInf;
    return a + b;
}

inline i128 sat_mul(i128 a, i128 b) {
    if (a == 0 || b == 0) return 0;
    bool neg = (a < 0) != (b < 0);
    if (!is_finite(a) || !is_finite(b)) return neg ? kNegInf : kPosInf;
    u128 ua = a < 0 ? u128(0) - u128(a) : u128(a);
    u128 ub = b < 0 ? u128(0) - u128(b) : u128(b);
    if (ua > (u128(kPosInf) - 1) / ub) return neg ? kNegInf : kPosInf;
    u128 m = ua * ub;
    return neg ? -i128(m) : i128(m);
}

// Floor division; infinities divide to infinities, division by zero is the
// caller's problem (checked before every use).
inline i128 floor_div(i128 a, i128 b) {
    if (!is_finite(a)) return (a < 0) == (b < 0) ? kPosInf : kNegInf;
    i128 q = a / b, r = a % b;
    if (r != 0 && ((r < 0) != (b < 0))) --q;
    return q;
}

inline i128 floor_mod(i128 a, i128 b) { return a - floor_div(a, b) * b; }

inline i128 ipow256(unsigned k) {
    i128 r = 1;
    while (k--) r *= 256;
    return r;
}

inline std::string i128_str(i128 v) {
    if (v == kNegInf) return "-inf";
    if (v == kPosInf) return "+inf";
    if (v == 0) return "0";
    bool neg = v < 0;
    u128 u = neg ? u128(0) - u128(v) : u128(v);
    char buf[48];
    int n = 0;
    while (u) {
        buf[n++] = char('0' + int(u % 10));
        u /= 10;
    }
    std::string s;
    if (neg) s.push_back('-');
    while (n) s.push_back(buf[--n]);
    return s;
}

// Source position of a token / statement, 1-based.
struct sloc {
    int line = 0;
    int col = 0;
};

struct front_error : std::runtime_error {
    sloc where;
    front_error(const std::string& msg, sloc at = {})
        : std::runtime_error(at.line ? (std::to_string(at.line) + ":" + std::to_string(at.col) + ": " + msg)
                                     : msg),
          where(at) {}
};

} // namespace cellscope
