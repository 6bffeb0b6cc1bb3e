#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>

#include "common.hpp"

namespace cellscope {

// The 13 scalar types of the analyzed language. `long double` is folded into
// double (they share size and semantics under every supported layout), which
// keeps the universe at exactly 13 members including the pointer type.
enum class scalar_type : uint8_t {
    schar,
    uchar,
    sshort,
    ushort,
    sint,
    uint,
    slong,
    ulong,
    sllong,
    ullong,
    flt,
    dbl,
    ptr,
};

constexpr int kNumScalarTypes = 13;

inline bool is_float(scalar_type t) { return t == scalar_type::flt || t == scalar_type::dbl; }
inline bool is_ptr(scalar_type t) { return t == scalar_type::ptr; }
inline bool is_integer(scalar_type t) { return !is_float(t) && !is_ptr(t); }

inline bool is_signed_int(scalar_type t) {
    switch (t) {
    case scalar_type::schar:
    case scalar_type::sshort:
    case scalar_type::sint:
    case scalar_type::slong:
    case scalar_type::sllong: return true;
    default: return false;
    }
}

inline bool is_unsigned_int(scalar_type t) { return is_integer(t) && !is_signed_int(t); }

// Signed/unsigned sibling of the same width class; identity for non-integers.
inline scalar_type toggle_sign(scalar_type t) {
    switch (t) {
    case scalar_type::schar: return scalar_type::uchar;
    case scalar_type::uchar: return scalar_type::schar;
    case scalar_type::sshort: return scalar_type::ushort;
    case scalar_type::ushort: return scalar_type::sshort;
    case scalar_type::sint: return scalar_type::uint;
    case scalar_type::uint: return scalar_type::sint;
    case scalar_type::slong: return scalar_type::ulong;
    case scalar_type::ulong: return scalar_type::slong;
    case scalar_type::sllong: return scalar_type::ullong;
    case scalar_type::ullong: return scalar_type::sllong;
    default: return t;
    }
}

inline const char* scalar_name(scalar_type t) {
    switch (t) {
    case scalar_type::schar: return "char";
    case scalar_type::uchar: return "uchar";
    case scalar_type::sshort: return "short";
    case scalar_type::ushort: return "ushort";
    case scalar_type::sint: return "int";
    case scalar_type::uint: return "uint";
    case scalar_type::slong: return "long";
    case scalar_type::ulong: return "ulong";
    case scalar_type::sllong: return "llong";
    case scalar_type::ullong: return "ullong";
    case scalar_type::flt: return "float";
    case scalar_type::dbl: return "double";
    case scalar_type::ptr: return "ptr";
    }
    return "?";
}

enum class endianness : uint8_t { little, big };

// Byte-level layout parameters: size and alignment of every scalar type plus
// byte order. Everything downstream (field offsets, recomposition, cell
// bounds) is derived from this one table.
struct abi {
    endianness endian = endianness::little;
    std::array<uint32_t, kNumScalarTypes> size{};
    std::array<uint32_t, kNumScalarTypes> align{};

    static abi default_abi() {
        abi a;
        a.set(scalar_type::schar, 1);
        a.set(scalar_type::uchar, 1);
        a.set(scalar_type::sshort, 2);
        a.set(scalar_type::ushort, 2);
        a.set(scalar_type::sint, 4);
        a.set(scalar_type::uint, 4);
        a.set(scalar_type::slong, 4);
        a.set(scalar_type::ulong, 4);
        a.set(scalar_type::sllong, 8);
        a.set(scalar_type::ullong, 8);
        a.set(scalar_type::flt, 4);
        a.set(scalar_type::dbl, 8);
        a.set(scalar_type::ptr, 4);
        return a;
    }

    void set(scalar_type t, uint32_t sz) {
        size[size_t(t)] = sz;
        align[size_t(t)] = sz < 4 ? sz : 4;
    }

    uint32_t sizeof_(scalar_type t) const { return size[size_t(t)]; }
    uint32_t alignof_(scalar_type t) const { return align[size_t(t)]; }

    // The unsigned integer type whose size matches the pointer size; pointer
    // recomposition and pointer subtraction results use it.
    scalar_type address_type() const {
        for (scalar_type t : {scalar_type::uint, scalar_type::ulong, scalar_type::ullong,
                              scalar_type::ushort, scalar_type::uchar})
            if (sizeof_(t) == sizeof_(scalar_type::ptr)) return t;
        throw front_error("abi: no unsigned integer type matches the pointer size");
    }

    // Value range of an integer type as mathematical integers.
    i128 type_min(scalar_type t) const {
        if (is_signed_int(t)) return -(i128(1) << (8 * sizeof_(t) - 1));
        return 0;
    }
    i128 type_max(scalar_type t) const {
        if (is_signed_int(t)) return (i128(1) << (8 * sizeof_(t) - 1)) - 1;
        return (i128(1) << (8 * sizeof_(t))) - 1;
    }

    void validate() const {
        for (int i = 0; i < kNumScalarTypes; ++i) {
            auto t = scalar_type(i);
            uint32_t sz = size[i], al = align[i];
            if (sz == 0 || sz > 16) throw front_error(std::string("abi: bad sizeof for ") + scalar_name(t));
            if (al == 0 || (al & (al - 1)) != 0)
                throw front_error(std::string("abi: alignment must be a power of two for ") + scalar_name(t));
            if (sz % al != 0 && al % sz != 0)
                throw front_error(std::string("abi: size and alignment must divide one another for ") +
                                  scalar_name(t));
        }
        if (sizeof_(scalar_type::schar) != 1 || sizeof_(scalar_type::uchar) != 1)
            throw front_error("abi: char types must have size 1");
        address_type(); // throws when no address-width integer type exists
    }
};

// two's-complement wrap into the range of t
inline i128 wrap_int(const abi& a, scalar_type t, i128 v) {
    uint32_t n = a.sizeof_(t);
    u128 span = u128(1) << (8 * n);
    u128 uv = u128(v) & (span - 1);
    i128 r = i128(uv);
    if (is_signed_int(t) && r > a.type_max(t)) r -= i128(span);
    return r;
}

namespace detail {
inline std::optional<scalar_type> abi_key_type(const std::string& name) {
    if (name == "char") return scalar_type::schar;
    if (name == "uchar") return scalar_type::uchar;
    if (name == "short") return scalar_type::sshort;
    if (name == "ushort") return scalar_type::ushort;
    if (name == "int") return scalar_type::sint;
    if (name == "uint") return scalar_type::uint;
    if (name == "long") return scalar_type::slong;
    if (name == "ulong") return scalar_type::ulong;
    if (name == "llong") return scalar_type::sllong;
    if (name == "ullong") return scalar_type::ullong;
    if (name == "float") return scalar_type::flt;
    if (name == "double") return scalar_type::dbl;
    if (name == "ptr") return scalar_type::ptr;
    return std::nullopt;
}

inline std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}
} // namespace detail

// Parses the line-oriented layout configuration:
//   endian = little | big
//   sizeof.<type> = <n>
//   alignof.<type> = <n>
// starting from the default layout. Unknown keys are rejected.
inline abi parse_abi(const std::string& text) {
    abi a = abi::default_abi();
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = detail::trim(line);
        if (s.empty() || s[0] == '#') continue;
        size_t eq = s.find('=');
        if (eq == std::string::npos) throw front_error("abi config: missing '='", {lineno, 1});
        std::string key = detail::trim(s.substr(0, eq));
        std::string val = detail::trim(s.substr(eq + 1));
        if (key == "endian") {
            if (val == "little")
                a.endian = endianness::little;
            else if (val == "big")
                a.endian = endianness::big;
            else
                throw front_error("abi config: endian must be 'little' or 'big'", {lineno, 1});
            continue;
        }
        size_t dot = key.find('.');
        std::string field = dot == std::string::npos ? key : key.substr(0, dot);
        if (field != "sizeof" && field != "alignof")
            throw front_error("abi config: unknown key '" + key + "'", {lineno, 1});
        auto ty = detail::abi_key_type(key.substr(dot + 1));
        if (!ty) throw front_error("abi config: unknown type in key '" + key + "'", {lineno, 1});
        unsigned long n = 0;
        try {
            size_t pos = 0;
            n = std::stoul(val, &pos);
            if (pos != val.size()) throw std::invalid_argument(val);
        } catch (const std::exception&) {
            throw front_error("abi config: value of '" + key + "' is not a number", {lineno, 1});
        }
        if (field == "sizeof")
            a.size[size_t(*ty)] = uint32_t(n);
        else
            a.align[size_t(*ty)] = uint32_t(n);
    }
    a.validate();
    return a;
}

} // namespace cellscope
