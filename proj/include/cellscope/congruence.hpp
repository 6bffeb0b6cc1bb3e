#pragma once

#include <numeric>

#include "interval.hpp"

namespace cellscope {

// Simple congruences x ≡ r (mod m). m == 0 is the constant r, m == 1 with
// r == 0 is top. Normalized so 0 <= r < m when m > 0.
struct congruence {
    i128 m = 1;
    i128 r = 0;
    bool bot = false;

    static congruence top() { return {}; }
    static congruence bottom() {
        congruence c;
        c.bot = true;
        return c;
    }
    static congruence constant(i128 v) {
        congruence c;
        c.m = 0;
        c.r = v;
        return c;
    }
    static congruence of(i128 mod, i128 rem) {
        congruence c;
        if (mod == 0) return constant(rem);
        c.m = mod < 0 ? -mod : mod;
        c.r = floor_mod(rem, c.m);
        return c;
    }

    bool is_bottom() const { return bot; }
    bool is_top() const { return !bot && m == 1; }
    bool is_constant() const { return !bot && m == 0; }

    bool contains(i128 v) const {
        if (bot) return false;
        if (m == 0) return v == r;
        return floor_mod(v, m) == r;
    }

    bool leq(const congruence& o) const {
        if (bot) return true;
        if (o.bot) return false;
        if (o.m == 0) return m == 0 && r == o.r;
        if (m == 0) return floor_mod(r, o.m) == o.r;
        return m % o.m == 0 && floor_mod(r, o.m) == o.r;
    }
    bool operator==(const congruence& o) const {
        if (bot || o.bot) return bot == o.bot;
        return m == o.m && r == o.r;
    }

    static i128 gcd3(i128 a, i128 b, i128 c) { return gcd2(gcd2(a, b), c); }
    static i128 gcd2(i128 a, i128 b) {
        if (a < 0) a = -a;
        if (b < 0) b = -b;
        while (b) {
            i128 t = a % b;
            a = b;
            b = t;
        }
        return a;
    }

    congruence join(const congruence& o) const {
        if (bot) return o;
        if (o.bot) return *this;
        i128 d = r - o.r;
        return of(gcd3(m, o.m, d < 0 ? -d : d), r);
    }

    // moduli large enough to overflow products degrade to sound defaults
    static constexpr i128 kModCap = i128(1) << 40;

    congruence meet(const congruence& o) const {
        if (bot || o.bot) return bottom();
        if (m == 0 && o.m == 0) return r == o.r ? *this : bottom();
        if (m == 0) return o.contains(r) ? *this : bottom();
        if (o.m == 0) return contains(o.r) ? o : bottom();
        if (m > kModCap || o.m > kModCap) return *this; // over-approximates the meet
        i128 g = gcd2(m, o.m);
        if (floor_mod(r - o.r, g) != 0) return bottom();
        // CRT: x = r + m*t with t ≡ (o.r - r)/g * inv(m/g) (mod o.m/g)
        i128 l = m / g * o.m;
        i128 mg = m / g, og = o.m / g;
        i128 inv = mod_inverse(floor_mod(mg, og), og);
        i128 t = floor_mod(floor_div(o.r - r, g) * inv, og);
        return of(l, r + m * t);
    }

    // inverse of a modulo n (gcd(a, n) == 1, n >= 1)
    static i128 mod_inverse(i128 a, i128 n) {
        if (n == 1) return 0;
        i128 t = 0, nt = 1, rr = n, nr = a;
        while (nr != 0) {
            i128 q = rr / nr;
            i128 tmp = t - q * nt;
            t = nt;
            nt = tmp;
            tmp = rr - q * nr;
            rr = nr;
            nr = tmp;
        }
        return floor_mod(t, n);
    }

    // unstable widening goes to top after a couple of rounds; `step` counts
    // prior widenings at this point
    congruence widen(const congruence& next, uint32_t step, uint32_t delay) const {
        if (bot) return next;
        if (next.bot) return *this;
        congruence j = join(next);
        if (j == *this) return j;
        return step >= delay ? top() : j;
    }

    // ---- arithmetic ----

    congruence add(const congruence& o) const {
        if (bot || o.bot) return bottom();
        return of(gcd2(m, o.m), r + o.r);
    }
    congruence sub(const congruence& o) const {
        if (bot || o.bot) return bottom();
        return of(gcd2(m, o.m), r - o.r);
    }
    congruence neg() const {
        if (bot) return bottom();
        return of(m, -r);
    }
    congruence mul(const congruence& o) const {
        if (bot || o.bot) return bottom();
        if (m > kModCap || o.m > kModCap) return top();
        i128 rb = r < 0 ? -r : r, ob = o.r < 0 ? -o.r : o.r;
        if (rb > kModCap || ob > kModCap) {
            // product modulo 2^128 keeps every power-of-two residue intact
            if (m == 0 && o.m == 0) return constant(i128(u128(r) * u128(o.r)));
            return top();
        }
        return of(gcd3(m * o.m, m * o.r, o.m * r), r * o.r);
    }

    // exact division only when everything is divisible by the constant c;
    // anything else loses the congruence
    congruence div_const(i128 c) const {
        if (bot) return bottom();
        if (c == 0) return bottom();
        i128 a = c < 0 ? -c : c;
        if (m == 0 && r % c == 0) return constant(r / c);
        if (m != 0 && m % a == 0 && r % a == 0) return of(m / a, r / a * (c < 0 ? -1 : 1));
        return top();
    }

    // remainder by a positive constant for nonnegative values
    congruence mod_const_nonneg(i128 c) const {
        if (bot) return bottom();
        if (c <= 0) return top();
        if (m == 0 && r >= 0) return constant(r % c);
        if (m != 0 && m % c == 0) return of(c, r % c);
        return top();
    }

    congruence shl_const(i128 k) const {
        if (bot) return bottom();
        if (k < 0 || k > 63) return top();
        return mul(constant(i128(1) << int(k)));
    }
};

} // namespace cellscope
