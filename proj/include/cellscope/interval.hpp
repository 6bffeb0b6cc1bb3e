#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "abi.hpp"
#include "cfg.hpp"

namespace cellscope {

// Integer intervals over Z with saturating infinities. Bottom is lo > hi.
struct interval {
    i128 lo = kNegInf;
    i128 hi = kPosInf;

    static interval top() { return {}; }
    static interval bottom() { return {kPosInf, kNegInf}; }
    static interval single(i128 v) { return {v, v}; }
    static interval range(i128 l, i128 h) { return {l, h}; }
    static interval of_type(const abi& a, scalar_type t) {
        return {a.type_min(t), a.type_max(t)};
    }

    bool is_bottom() const { return lo > hi; }
    bool is_top() const { return lo == kNegInf && hi == kPosInf; }
    bool is_single() const { return lo == hi && is_finite(lo); }
    bool contains(i128 v) const { return lo <= v && v <= hi; }

    bool leq(const interval& o) const {
        if (is_bottom()) return true;
        if (o.is_bottom()) return false;
        return o.lo <= lo && hi <= o.hi;
    }
    bool operator==(const interval& o) const {
        if (is_bottom() && o.is_bottom()) return true;
        return lo == o.lo && hi == o.hi;
    }

    interval join(const interval& o) const {
        if (is_bottom()) return o;
        if (o.is_bottom()) return *this;
        return {lo < o.lo ? lo : o.lo, hi > o.hi ? hi : o.hi};
    }
    interval meet(const interval& o) const {
        if (is_bottom() || o.is_bottom()) return bottom();
        return {lo > o.lo ? lo : o.lo, hi < o.hi ? hi : o.hi};
    }

    // widening with a fixed threshold ramp
    interval widen(const interval& next) const {
        if (is_bottom()) return next;
        if (next.is_bottom()) return *this;
        interval r = *this;
        if (next.lo < lo) r.lo = threshold_down(next.lo);
        if (next.hi > hi) r.hi = threshold_up(next.hi);
        return r;
    }

    static i128 threshold_up(i128 v) {
        for (i128 t : thresholds())
            if (t >= v) return t;
        return kPosInf;
    }
    static i128 threshold_down(i128 v) {
        const auto& ts = thresholds();
        for (size_t i = ts.size(); i-- > 0;)
            if (ts[i] <= v) return ts[i];
        return kNegInf;
    }
    static const std::array<i128, 17>& thresholds() {
        static const std::array<i128, 17> ts = {
            kNegInf,
            i128(INT64_MIN),
            -(i128(1) << 31),
            -65536,
            -32768,
            -256,
            -128,
            -1,
            0,
            1,
            127,
            255,
            32767,
            65535,
            (i128(1) << 31) - 1,
            i128(INT64_MAX),
            kPosInf,
        };
        return ts;
    }

    // ---- arithmetic ----

    interval neg() const {
        if (is_bottom()) return bottom();
        return {sat_neg(hi), sat_neg(lo)};
    }
    interval add(const interval& o) const {
        if (is_bottom() || o.is_bottom()) return bottom();
        return {sat_add(lo, o.lo), sat_add(hi, o.hi)};
    }
    interval sub(const interval& o) const { return add(o.neg()); }

    interval mul(const interval& o) const {
        if (is_bottom() || o.is_bottom()) return bottom();
        i128 c[4] = {sat_mul(lo, o.lo), sat_mul(lo, o.hi), sat_mul(hi, o.lo), sat_mul(hi, o.hi)};
        i128 l = c[0], h = c[0];
        for (int i = 1; i < 4; ++i) {
            if (c[i] < l) l = c[i];
            if (c[i] > h) h = c[i];
        }
        return {l, h};
    }

    // C truncating division; the divisor interval must not contain 0 (the
    // caller refines it first)
    interval div_trunc(const interval& o) const {
        if (is_bottom() || o.is_bottom()) return bottom();
        interval out = bottom();
        auto piece = [&](i128 dl, i128 dh) {
            if (dl > dh) return;
            i128 c[4] = {tdiv(lo, dl), tdiv(lo, dh), tdiv(hi, dl), tdiv(hi, dh)};
            i128 l = c[0], h = c[0];
            for (int i = 1; i < 4; ++i) {
                if (c[i] < l) l = c[i];
                if (c[i] > h) h = c[i];
            }
            out = out.join({l, h});
        };
        piece(o.lo > 1 ? o.lo : 1, o.hi);       // positive part
        piece(o.lo, o.hi < -1 ? o.hi : i128(-1)); // negative part
        return out;
    }

    static i128 tdiv(i128 a, i128 b) {
        if (!is_finite(a)) return (a < 0) == (b < 0) ? kPosInf : kNegInf;
        if (!is_finite(b)) return 0;
        return a / b; // truncation
    }

    // C remainder (sign follows the dividend), divisor without 0
    interval mod_trunc(const interval& o) const {
        if (is_bottom() || o.is_bottom()) return bottom();
        i128 m = o.hi;
        if (sat_neg(o.lo) > m) m = sat_neg(o.lo);
        if (!is_finite(m)) {
            // |r| < |divisor|, sign from dividend
            i128 l = lo < 0 ? kNegInf : 0;
            i128 h = hi > 0 ? kPosInf : 0;
            return {l, h};
        }
        i128 bound = m - 1;
        i128 l = lo < 0 ? -bound : 0;
        i128 h = hi > 0 ? bound : 0;
        interval r{l, h};
        // a small nonnegative dividend is its own remainder upper bound
        if (lo >= 0 && is_finite(hi) && hi < r.hi) r.hi = hi;
        if (hi <= 0 && is_finite(lo) && lo > r.lo) r.lo = lo;
        return r;
    }

    interval shl(const interval& o) const {
        if (is_bottom() || o.is_bottom()) return bottom();
        if (o.is_single() && o.lo >= 0 && o.lo < 63) {
            i128 f = i128(1) << int(o.lo);
            return mul(single(f));
        }
        if (lo >= 0 && o.lo >= 0) return {0, kPosInf};
        return top();
    }

    interval shr(const interval& o) const {
        if (is_bottom() || o.is_bottom()) return bottom();
        if (o.is_single() && o.lo >= 0 && o.lo < 127) {
            i128 f = i128(1) << int(o.lo);
            // arithmetic shift is floor division by 2^k
            return {floor_div(lo, f), floor_div(hi, f)};
        }
        if (lo >= 0) return {0, is_finite(hi) ? hi : kPosInf};
        return top();
    }

    interval bit_and(const interval& o) const {
        if (is_bottom() || o.is_bottom()) return bottom();
        if (lo >= 0 && o.lo >= 0) {
            i128 h = hi < o.hi ? hi : o.hi;
            return {0, h};
        }
        return top();
    }
    interval bit_or(const interval& o) const {
        if (is_bottom() || o.is_bottom()) return bottom();
        if (lo >= 0 && o.lo >= 0 && is_finite(hi) && is_finite(o.hi)) {
            i128 h = next_pow2m1(hi > o.hi ? hi : o.hi);
            return {0, h};
        }
        return top();
    }
    interval bit_xor(const interval& o) const { return bit_or(o); }

    static i128 next_pow2m1(i128 v) {
        i128 r = 1;
        while (r - 1 < v && r < (i128(1) << 100)) r <<= 1;
        return r - 1;
    }
};

// Float intervals over double with an explicit maybe-NaN flag. Bounds are
// rounded outward after every operation.
struct finterval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool nan = true;
    bool bot = false;

    static finterval top() { return {}; }
    static finterval bottom() {
        finterval f;
        f.bot = true;
        f.nan = false;
        return f;
    }
    static finterval single(double v) {
        finterval f;
        if (std::isnan(v)) {
            f.lo = 0;
            f.hi = 0;
            f.nan = true;
            // value range empty, only NaN
            f.lo = std::numeric_limits<double>::infinity();
            f.hi = -std::numeric_limits<double>::infinity();
            return f;
        }
        f.lo = f.hi = v;
        f.nan = false;
        return f;
    }

    bool is_bottom() const { return bot || (empty_range() && !nan); }
    bool empty_range() const { return lo > hi; }
    bool is_top() const {
        return !bot && nan && lo == -std::numeric_limits<double>::infinity() &&
               hi == std::numeric_limits<double>::infinity();
    }

    bool contains(double v) const {
        if (bot) return false;
        if (std::isnan(v)) return nan;
        return lo <= v && v <= hi;
    }

    bool leq(const finterval& o) const {
        if (is_bottom()) return true;
        if (o.is_bottom()) return false;
        if (nan && !o.nan) return false;
        if (empty_range()) return true;
        return o.lo <= lo && hi <= o.hi;
    }
    bool operator==(const finterval& o) const { return leq(o) && o.leq(*this); }

    finterval join(const finterval& o) const {
        if (is_bottom()) return o;
        if (o.is_bottom()) return *this;
        finterval r;
        r.bot = false;
        r.nan = nan || o.nan;
        r.lo = empty_range() ? o.lo : o.empty_range() ? lo : std::min(lo, o.lo);
        r.hi = empty_range() ? o.hi : o.empty_range() ? hi : std::max(hi, o.hi);
        return r;
    }
    finterval meet(const finterval& o) const {
        if (is_bottom() || o.is_bottom()) return bottom();
        finterval r;
        r.bot = false;
        r.nan = nan && o.nan;
        r.lo = std::max(lo, o.lo);
        r.hi = std::min(hi, o.hi);
        if (r.empty_range() && !r.nan) return bottom();
        return r;
    }
    finterval widen(const finterval& next) const {
        if (is_bottom()) return next;
        if (next.is_bottom()) return *this;
        finterval r = *this;
        r.nan = nan || next.nan;
        if (next.lo < lo) r.lo = -std::numeric_limits<double>::infinity();
        if (next.hi > hi) r.hi = std::numeric_limits<double>::infinity();
        return r;
    }

    static double down(double v) {
        if (std::isnan(v) || std::isinf(v)) return v;
        return std::nextafter(v, -std::numeric_limits<double>::infinity());
    }
    static double up(double v) {
        if (std::isnan(v) || std::isinf(v)) return v;
        return std::nextafter(v, std::numeric_limits<double>::infinity());
    }

    finterval binop(lop op, const finterval& o) const {
        if (is_bottom() || o.is_bottom()) return bottom();
        if (is_top() || o.is_top()) return top();
        finterval r;
        r.bot = false;
        r.nan = nan || o.nan;
        auto mk = [&](double a, double b, double c, double d) {
            double l = std::min(std::min(a, b), std::min(c, d));
            double h = std::max(std::max(a, b), std::max(c, d));
            if (std::isnan(a) || std::isnan(b) || std::isnan(c) || std::isnan(d)) {
                r.nan = true;
                r.lo = -std::numeric_limits<double>::infinity();
                r.hi = std::numeric_limits<double>::infinity();
            } else {
                r.lo = down(l);
                r.hi = up(h);
            }
        };
        switch (op) {
        case lop::add: mk(lo + o.lo, lo + o.hi, hi + o.lo, hi + o.hi); break;
        case lop::sub: mk(lo - o.lo, lo - o.hi, hi - o.lo, hi - o.hi); break;
        case lop::mul: mk(lo * o.lo, lo * o.hi, hi * o.lo, hi * o.hi); break;
        case lop::div:
            if (o.lo <= 0 && o.hi >= 0) return top(); // division near zero
            mk(lo / o.lo, lo / o.hi, hi / o.lo, hi / o.hi);
            break;
        default: return top();
        }
        return r;
    }

    finterval fneg() const {
        if (is_bottom()) return bottom();
        finterval r = *this;
        double l = -hi, h = -lo;
        r.lo = l;
        r.hi = h;
        return r;
    }

    // rounding through float storage
    finterval to_float_precision() const {
        if (is_bottom() || is_top()) return *this;
        finterval r = *this;
        if (!empty_range()) {
            float fl = float(lo), fh = float(hi);
            r.lo = std::min(double(fl), lo);
            r.hi = std::max(double(fh), hi);
            r.lo = down(r.lo);
            r.hi = up(r.hi);
        }
        return r;
    }
};

} // namespace cellscope
