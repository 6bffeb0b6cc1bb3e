#pragma once

#include "congruence.hpp"

namespace cellscope {

// Reduced product of intervals and congruences. Every operation re-runs the
// reduction: bounds snap to congruent values, singletons flow both ways,
// inconsistency collapses to bottom.
struct numeric_value {
    interval iv;
    congruence cg;

    static numeric_value top() { return {}; }
    static numeric_value bottom() { return {interval::bottom(), congruence::bottom()}; }
    static numeric_value single(i128 v) { return {interval::single(v), congruence::constant(v)}; }
    static numeric_value range(i128 lo, i128 hi) {
        numeric_value n{interval::range(lo, hi), congruence::top()};
        n.reduce();
        return n;
    }
    static numeric_value of(interval i, congruence c) {
        numeric_value n{i, c};
        n.reduce();
        return n;
    }
    static numeric_value of_type(const abi& a, scalar_type t) {
        return {interval::of_type(a, t), congruence::top()};
    }

    bool is_bottom() const { return iv.is_bottom() || cg.is_bottom(); }
    bool is_single() const { return iv.is_single(); }
    i128 single_value() const { return iv.lo; }
    bool contains(i128 v) const { return iv.contains(v) && cg.contains(v); }

    void reduce() {
        if (iv.is_bottom() || cg.is_bottom()) {
            *this = bottom();
            return;
        }
        if (cg.is_constant()) {
            iv = iv.meet(interval::single(cg.r));
            if (iv.is_bottom()) {
                *this = bottom();
                return;
            }
            return;
        }
        if (cg.m > 1) {
            if (is_finite(iv.lo)) iv.lo = iv.lo + floor_mod(cg.r - iv.lo, cg.m);
            if (is_finite(iv.hi)) iv.hi = iv.hi - floor_mod(iv.hi - cg.r, cg.m);
            if (iv.is_bottom()) {
                *this = bottom();
                return;
            }
        }
        if (iv.is_single()) cg = cg.meet(congruence::constant(iv.lo));
        if (cg.is_bottom()) *this = bottom();
    }

    bool leq(const numeric_value& o) const {
        if (is_bottom()) return true;
        if (o.is_bottom()) return false;
        return iv.leq(o.iv) && cg.leq(o.cg);
    }
    bool operator==(const numeric_value& o) const {
        if (is_bottom() && o.is_bottom()) return true;
        return iv == o.iv && cg == o.cg;
    }

    numeric_value join(const numeric_value& o) const {
        if (is_bottom()) return o;
        if (o.is_bottom()) return *this;
        return of(iv.join(o.iv), cg.join(o.cg));
    }
    numeric_value meet(const numeric_value& o) const {
        if (is_bottom() || o.is_bottom()) return bottom();
        return of(iv.meet(o.iv), cg.meet(o.cg));
    }
    numeric_value widen(const numeric_value& next, uint32_t step, uint32_t cong_delay) const {
        if (is_bottom()) return next;
        if (next.is_bottom()) return *this;
        numeric_value r{iv.widen(next.iv), cg.widen(next.cg, step, cong_delay)};
        r.reduce();
        return r;
    }

    // ---- arithmetic (pre-wrap, over Z) ----

    numeric_value add(const numeric_value& o) const { return of(iv.add(o.iv), cg.add(o.cg)); }
    numeric_value sub(const numeric_value& o) const { return of(iv.sub(o.iv), cg.sub(o.cg)); }
    numeric_value neg() const { return of(iv.neg(), cg.neg()); }
    numeric_value mul(const numeric_value& o) const { return of(iv.mul(o.iv), cg.mul(o.cg)); }

    numeric_value div_trunc(const numeric_value& o) const {
        // div_const keeps the congruence only when division is exact, which
        // is when truncation agrees with it
        congruence c = o.iv.is_single() && o.iv.lo != 0 ? cg.div_const(o.iv.lo) : congruence::top();
        return of(iv.div_trunc(o.iv), c);
    }

    numeric_value mod_trunc(const numeric_value& o) const {
        congruence c = congruence::top();
        if (o.iv.is_single() && o.iv.lo > 0 && iv.lo >= 0) c = cg.mod_const_nonneg(o.iv.lo);
        return of(iv.mod_trunc(o.iv), c);
    }

    numeric_value shl(const numeric_value& o) const {
        congruence c = o.iv.is_single() ? cg.shl_const(o.iv.lo) : congruence::top();
        return of(iv.shl(o.iv), c);
    }
    numeric_value shr(const numeric_value& o) const { return of(iv.shr(o.iv), congruence::top()); }
    numeric_value bit_and(const numeric_value& o) const {
        return of(iv.bit_and(o.iv), congruence::top());
    }
    numeric_value bit_or(const numeric_value& o) const {
        return of(iv.bit_or(o.iv), congruence::top());
    }
    numeric_value bit_xor(const numeric_value& o) const {
        return of(iv.bit_xor(o.iv), congruence::top());
    }

    // Wraps into the range of t. `wrapped` reports whether any value actually
    // wraps (drives the overflow alarm for signed types).
    numeric_value wrap_to(const abi& a, scalar_type t, bool* wrapped = nullptr) const {
        if (is_bottom()) return bottom();
        interval ty = interval::of_type(a, t);
        if (iv.leq(ty)) {
            if (wrapped) *wrapped = false;
            return *this;
        }
        if (wrapped) *wrapped = true;
        i128 span = i128(1) << (8 * a.sizeof_(t));
        if (is_finite(iv.lo) && is_finite(iv.hi)) {
            // a window no wider than the type translates uniformly when it
            // does not straddle a wrap boundary
            if (iv.hi - iv.lo < span) {
                i128 wl = wrap_int(a, t, iv.lo), wh = wrap_int(a, t, iv.hi);
                if (wl <= wh) {
                    congruence c = (cg.m > 0 && span % cg.m == 0) || cg.is_constant()
                                       ? shift_cg(a, t)
                                       : congruence::top();
                    return of(interval::range(wl, wh), c);
                }
            }
        }
        congruence c = cg.m > 1 && span % cg.m == 0 ? cg : congruence::top();
        return of(ty, c);
    }

private:
    congruence shift_cg(const abi& a, scalar_type t) const {
        if (cg.is_constant()) return congruence::constant(wrap_int(a, t, cg.r));
        return cg; // translation by a multiple of the span preserves residues
    }
};

// wrap of integers (not pointers) used in several transfer functions
inline i128 wrap_int_ref(const abi& a, scalar_type t, i128 v) { return wrap_int(a, t, v); }

} // namespace cellscope
