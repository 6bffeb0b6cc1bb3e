#pragma once

#include <bit>
#include <cmath>
#include <cstring>
#include <vector>

#include "abi.hpp"
#include "cfg.hpp"

namespace cellscope {

// Error classes shared by concrete execution events and abstract alarms; a
// differential run demands that every concrete event is covered by an alarm
// of the same kind at the same point.
enum class alarm_kind : uint8_t {
    overflow,        // signed wrap, int-min negation, float-to-int range
    div_by_zero,     // integer division or remainder by zero
    shift_range,     // shift count negative or >= bit width
    out_of_bounds,   // pointer arithmetic or access outside the base object
    misaligned,      // access offset not a multiple of the type alignment
    null_deref,      // access through a null pointer
    invalid_pointer, // arithmetic or access on a dangling or junk pointer
    cross_base,      // subtraction or ordering of unrelated pointers
    uninit_read,     // scalar read touching never-written non-static bytes
};

inline constexpr int kNumAlarmKinds = 9;

inline const char* alarm_name(alarm_kind k) {
    switch (k) {
    case alarm_kind::overflow: return "overflow";
    case alarm_kind::div_by_zero: return "div-by-zero";
    case alarm_kind::shift_range: return "shift-range";
    case alarm_kind::out_of_bounds: return "out-of-bounds";
    case alarm_kind::misaligned: return "misaligned";
    case alarm_kind::null_deref: return "null-deref";
    case alarm_kind::invalid_pointer: return "invalid-pointer";
    case alarm_kind::cross_base: return "cross-base-arith";
    case alarm_kind::uninit_read: return "uninit-read";
    }
    return "?";
}

// A runtime scalar. Integers live in the `i` field (always within the range
// of `t`), floats in `f` (double precision; float-typed values are already
// rounded), pointers are a base plus byte offset. Pointers never have a
// numeric address.
struct scalar_value {
    scalar_type t = scalar_type::sint;
    i128 i = 0;
    double f = 0.0;
    base_ref pb = base_ref::null();
    i128 po = 0;

    static scalar_value of_int(scalar_type ty, i128 v) {
        scalar_value s;
        s.t = ty;
        s.i = v;
        return s;
    }
    static scalar_value of_float(scalar_type ty, double v) {
        scalar_value s;
        s.t = ty;
        s.f = ty == scalar_type::flt ? double(float(v)) : v;
        return s;
    }
    static scalar_value of_ptr(base_ref b, i128 off) {
        scalar_value s;
        s.t = scalar_type::ptr;
        s.pb = b;
        s.po = off;
        return s;
    }

    bool is_null() const { return t == scalar_type::ptr && pb.k == base_ref::kind::null; }

    bool operator==(const scalar_value& o) const {
        if (t != o.t) return false;
        if (t == scalar_type::ptr) return pb == o.pb && po == o.po;
        if (is_float(t)) return f == o.f || (std::isnan(f) && std::isnan(o.f));
        return i == o.i;
    }
};

// One byte of concrete memory. Integer and float stores produce raw bytes of
// the two's-complement / IEEE representation; pointer stores produce symbolic
// pieces (a pointer has no numeric encoding), except null which is raw zero.
// An uninitialized byte holds a fixed garbage value drawn when its variable
// was created, so copied garbage stays byte-for-byte equal to its source.
struct cbyte {
    enum class kind : uint8_t { uninit, raw, piece };
    kind k = kind::uninit;
    uint8_t v = 0;             // raw value, or the garbage value while uninit
    base_ref pb;               // piece: pointer base
    i128 po = 0;               // piece: pointer offset
    uint8_t idx = 0;           // piece: memory byte index within the pointer

    static cbyte uninit(uint8_t garbage = 0) {
        cbyte c;
        c.v = garbage;
        return c;
    }
    static cbyte raw(uint8_t b) {
        cbyte c;
        c.k = kind::raw;
        c.v = b;
        return c;
    }
    static cbyte piece(base_ref b, i128 off, uint8_t i) {
        cbyte c;
        c.k = kind::piece;
        c.pb = b;
        c.po = off;
        c.idx = i;
        return c;
    }
};

// representation of an in-range integer as an unsigned bit pattern
inline u128 int_rep(const abi& a, scalar_type t, i128 v) {
    uint32_t n = a.sizeof_(t);
    u128 span = u128(1) << (8 * n);
    return u128(v) & (span - 1);
}

inline uint64_t float_bits(scalar_type t, double d) {
    if (t == scalar_type::flt) return std::bit_cast<uint32_t>(float(d));
    return std::bit_cast<uint64_t>(d);
}

inline double float_from_bits(scalar_type t, uint64_t bits) {
    if (t == scalar_type::flt) return double(std::bit_cast<float>(uint32_t(bits)));
    return std::bit_cast<double>(bits);
}

// Writes the n-byte representation of v into out[0..n). Byte order follows
// the configured endianness; pointer pieces are indexed by memory position.
inline void encode_scalar(const abi& a, const scalar_value& v, cbyte* out) {
    uint32_t n = a.sizeof_(v.t);
    if (v.t == scalar_type::ptr) {
        if (v.pb.k == base_ref::kind::null && v.po == 0) {
            for (uint32_t i = 0; i < n; ++i) out[i] = cbyte::raw(0);
        } else {
            for (uint32_t i = 0; i < n; ++i) out[i] = cbyte::piece(v.pb, v.po, uint8_t(i));
        }
        return;
    }
    u128 rep = is_float(v.t) ? u128(float_bits(v.t, v.f)) : int_rep(a, v.t, v.i);
    for (uint32_t i = 0; i < n; ++i) {
        uint32_t pos = a.endian == endianness::little ? i : n - 1 - i;
        out[pos] = cbyte::raw(uint8_t(rep >> (8 * i)));
    }
}

// Fixed arbitrary encoding byte for a pointer piece read at a numeric type,
// derived from the run seed so that equal pieces read equal everywhere.
inline uint8_t piece_byte(uint64_t seed, base_ref b, i128 off, uint8_t idx) {
    uint64_t z = seed;
    z ^= (uint64_t(b.k) << 58) ^ (uint64_t(b.id) << 24) ^ uint64_t(idx);
    z ^= uint64_t(u128(off)) * 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return uint8_t(z ^ (z >> 31));
}

// Result of reading n bytes at a scalar type. `nondet` means the bytes have
// no determined numeric value at this type (pointer pieces read as numbers)
// and the caller must substitute their fixed encoding bytes. Uninitialized
// bytes read at their garbage value and only set the flag.
struct recompose_result {
    scalar_value v;
    bool uninit = false;
    bool nondet = false;
};

inline recompose_result recompose(const abi& a, const cbyte* p, scalar_type t) {
    uint32_t n = a.sizeof_(t);
    recompose_result r;
    bool any_piece = false, any_uninit = false;
    for (uint32_t i = 0; i < n; ++i) {
        if (p[i].k == cbyte::kind::piece) any_piece = true;
        if (p[i].k == cbyte::kind::uninit) any_uninit = true;
    }
    r.uninit = any_uninit;
    if (t == scalar_type::ptr) {
        // exact reassembly of one pointer's pieces, or zero bytes as null;
        // anything else is junk
        if (any_piece) {
            bool exact = p[0].k == cbyte::kind::piece && p[0].idx == 0;
            for (uint32_t i = 1; exact && i < n; ++i)
                exact = p[i].k == cbyte::kind::piece && p[i].idx == i && p[i].pb == p[0].pb &&
                        p[i].po == p[0].po;
            if (exact && a.sizeof_(scalar_type::ptr) == n) {
                r.v = scalar_value::of_ptr(p[0].pb, p[0].po);
                return r;
            }
            r.v = scalar_value::of_ptr(base_ref::omega(), 0);
            return r;
        }
        bool zero = true;
        for (uint32_t i = 0; i < n; ++i) zero = zero && p[i].v == 0;
        r.v = zero ? scalar_value::of_ptr(base_ref::null(), 0)
                   : scalar_value::of_ptr(base_ref::omega(), 0);
        return r;
    }
    if (any_piece) {
        r.nondet = true;
        r.v = is_float(t) ? scalar_value::of_float(t, 0.0) : scalar_value::of_int(t, 0);
        return r;
    }
    u128 rep = 0;
    for (uint32_t i = 0; i < n; ++i) {
        uint32_t pos = a.endian == endianness::little ? i : n - 1 - i;
        rep |= u128(p[pos].v) << (8 * i);
    }
    if (is_float(t)) {
        r.v = scalar_value::of_float(t, float_from_bits(t, uint64_t(rep)));
        // keep the exact stored bit pattern (of_float re-rounds, which is the
        // identity here)
        r.v.f = float_from_bits(t, uint64_t(rep));
        return r;
    }
    r.v = scalar_value::of_int(t, wrap_int(a, t, i128(rep)));
    return r;
}

// ---- scalar operations ----

struct op_events {
    bool overflow = false;
    bool div0 = false;
    bool shift_range = false;
};

// Integer binary operation at type t (both operands already of type t, in
// range). Division by zero reports div0 and demands the trace halt; all other
// events wrap and continue.
inline i128 eval_int_bin(const abi& a, lop op, scalar_type t, i128 x, i128 y, op_events& ev) {
    uint32_t bits = 8 * a.sizeof_(t);
    auto wrap_note = [&](i128 raw) {
        i128 w = wrap_int(a, t, raw);
        if (w != raw && is_signed_int(t)) ev.overflow = true;
        return w;
    };
    switch (op) {
    case lop::add: return wrap_note(x + y);
    case lop::sub: return wrap_note(x - y);
    case lop::mul: {
        if (is_signed_int(t)) return wrap_note(x * y); // magnitudes <= 2^63, product fits
        u128 ur = u128(x) * u128(y);
        return wrap_int(a, t, i128(ur));
    }
    case lop::div:
        if (y == 0) {
            ev.div0 = true;
            return 0;
        }
        return wrap_note(x / y); // only INT_MIN / -1 wraps
    case lop::mod:
        if (y == 0) {
            ev.div0 = true;
            return 0;
        }
        if (is_signed_int(t) && y == -1) return 0; // avoids the INT_MIN trap
        return x % y;
    case lop::band: return x & y;
    case lop::bor: return x | y;
    case lop::bxor: return x ^ y;
    case lop::shl: {
        i128 c = y;
        if (c < 0 || c >= i128(bits)) {
            ev.shift_range = true;
            c = ((c % bits) + bits) % bits;
        }
        u128 rep = int_rep(a, t, x) << unsigned(c);
        i128 w = wrap_int(a, t, i128(rep));
        if (is_signed_int(t) && w != x * (i128(1) << unsigned(c))) ev.overflow = true;
        return w;
    }
    case lop::shr: {
        i128 c = y;
        if (c < 0 || c >= i128(bits)) {
            ev.shift_range = true;
            c = ((c % bits) + bits) % bits;
        }
        if (is_signed_int(t)) return x >> unsigned(c); // arithmetic
        return i128(u128(x) >> unsigned(c));
    }
    default: break;
    }
    return 0;
}

inline double eval_float_bin(lop op, scalar_type t, double x, double y) {
    double r = 0;
    switch (op) {
    case lop::add: r = x + y; break;
    case lop::sub: r = x - y; break;
    case lop::mul: r = x * y; break;
    case lop::div: r = x / y; break; // IEEE semantics, no event
    default: break;
    }
    if (t == scalar_type::flt) r = double(float(r));
    return r;
}

// three-way deterministic order for pointer comparison; bases are ordered by
// kind then id, matching the abstract domain's view that cross-base order is
// arbitrary but fixed
inline int ptr_compare(const scalar_value& a, const scalar_value& b) {
    if (a.pb == b.pb) return a.po < b.po ? -1 : a.po > b.po ? 1 : 0;
    if (a.pb < b.pb) return -1;
    return 1;
}

inline bool eval_compare(lop op, const scalar_value& a, const scalar_value& b) {
    if (a.t == scalar_type::ptr || b.t == scalar_type::ptr) {
        int c = ptr_compare(a, b);
        switch (op) {
        case lop::eq: return c == 0;
        case lop::ne: return c != 0;
        case lop::lt: return c < 0;
        case lop::le: return c <= 0;
        case lop::gt: return c > 0;
        case lop::ge: return c >= 0;
        default: return false;
        }
    }
    if (is_float(a.t) || is_float(b.t)) {
        double x = is_float(a.t) ? a.f : double(int64_t(a.i));
        double y = is_float(b.t) ? b.f : double(int64_t(b.i));
        switch (op) {
        case lop::eq: return x == y;
        case lop::ne: return x != y;
        case lop::lt: return x < y;
        case lop::le: return x <= y;
        case lop::gt: return x > y;
        case lop::ge: return x >= y;
        default: return false;
        }
    }
    switch (op) {
    case lop::eq: return a.i == b.i;
    case lop::ne: return a.i != b.i;
    case lop::lt: return a.i < b.i;
    case lop::le: return a.i <= b.i;
    case lop::gt: return a.i > b.i;
    case lop::ge: return a.i >= b.i;
    default: return false;
    }
}

// truth of a scalar in boolean position
inline bool scalar_truth(const scalar_value& v) {
    if (v.t == scalar_type::ptr) return !v.is_null();
    if (is_float(v.t)) return v.f != 0.0; // NaN counts as true
    return v.i != 0;
}

// Conversion between scalar types. Integer-to-integer wraps silently;
// float-to-integer out of range is an overflow event with result 0 (the
// analyzer gives the full target range there). Pointer conversions are
// handled by the caller.
inline scalar_value convert_scalar(const abi& a, const scalar_value& v, scalar_type to,
                                   op_events& ev) {
    if (to == v.t) return v;
    if (is_float(to)) {
        double d = is_float(v.t) ? v.f : double(v.i);
        return scalar_value::of_float(to, d);
    }
    if (is_float(v.t)) {
        double d = v.f;
        if (!std::isfinite(d)) {
            ev.overflow = true;
            return scalar_value::of_int(to, 0);
        }
        double tr = std::trunc(d);
        if (tr < -1e40 || tr > 1e40) {
            ev.overflow = true;
            return scalar_value::of_int(to, 0);
        }
        i128 iv = i128(tr);
        if (iv < a.type_min(to) || iv > a.type_max(to)) {
            ev.overflow = true;
            return scalar_value::of_int(to, 0);
        }
        return scalar_value::of_int(to, iv);
    }
    return scalar_value::of_int(to, wrap_int(a, to, v.i));
}

} // namespace cellscope
