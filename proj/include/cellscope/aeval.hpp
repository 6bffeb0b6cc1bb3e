#pragma once

#include <functional>

#include "valueenv.hpp"

namespace cellscope {

// Abstract evaluation of lowered expressions as a refinement tree: a forward
// pass computes per-node values and raises alarms, a backward pass pushes a
// target value down to the leaves, meeting dereferenced cells through the
// supplied hooks (the guard transfer runs backward from "this is zero").
struct anode {
    lexpr_ref e = nullptr;
    abs_value v;
    bool exact = true; // no wrap occurred; inversion through this node is valid
    std::vector<anode> kids;
};

struct aeval_hooks {
    const cfg* g = nullptr;
    const abi* ab = nullptr;
    std::function<abs_value(const abs_value& addr, scalar_type)> load;
    std::function<void(const abs_value& addr, scalar_type, const abs_value&)> refine;
    // survivors of a dereference: bases and offsets the access cannot fault on
    std::function<abs_value(const abs_value& addr, scalar_type)> prune_addr;
    std::function<abs_value(var_id)> input; // volatile draw range
    std::function<void(alarm_kind, const std::string&)> alarm;
    std::function<uint32_t(base_ref)> base_size; // byte size of a variable base
};

class aeval {
public:
    explicit aeval(aeval_hooks h) : h_(std::move(h)) {}

    anode forward(lexpr_ref e) {
        anode n;
        n.e = e;
        switch (e->k) {
        case lexpr::kind::num:
            n.v = abs_value::of_int(scalar_type::sllong, numeric_value::single(e->ival));
            return n;
        case lexpr::kind::fnum:
            n.v = abs_value::of_float(scalar_type::dbl, finterval::single(e->fval));
            return n;
        case lexpr::kind::addr:
            n.v = abs_value::of_ptr(base_set::single(e->base), numeric_value::single(0));
            return n;
        case lexpr::kind::input: n.v = h_.input(e->vol_var); return n;
        case lexpr::kind::deref: {
            n.kids.push_back(forward(e->a));
            n.v = h_.load(n.kids[0].v, e->tau);
            if (h_.prune_addr) {
                // surviving the access narrows the pointer it went through
                abs_value pr = h_.prune_addr(n.kids[0].v, e->tau);
                if (pr.is_bottom() || !backward(n.kids[0], pr))
                    n.v = abs_value::bottom_of(e->tau);
            }
            return n;
        }
        case lexpr::kind::cast: {
            n.kids.push_back(forward(e->a));
            n.v = eval_cast(n.kids[0].v, e->tau, n.exact);
            return n;
        }
        case lexpr::kind::un: {
            n.kids.push_back(forward(e->a));
            n.v = eval_un(e->op, e->tau, n.kids[0].v, n.exact);
            return n;
        }
        case lexpr::kind::bin: {
            n.kids.push_back(forward(e->a));
            n.kids.push_back(forward(e->b));
            n.v = eval_bin(e->op, e->tau, n.kids[0], n.kids[1], n.exact);
            return n;
        }
        }
        n.v = abs_value::top_of(*h_.ab, scalar_type::sint);
        return n;
    }

    // Pushes `want` down the tree. Returns false when the meet is empty
    // (the branch is infeasible).
    bool backward(anode& n, const abs_value& want) {
        abs_value nv = n.v.meet(want);
        if (nv.is_bottom()) return false;
        bool changed = !(n.v.leq(nv) && nv.leq(n.v));
        n.v = nv;
        switch (n.e->k) {
        case lexpr::kind::num:
        case lexpr::kind::fnum:
        case lexpr::kind::addr:
        case lexpr::kind::input: return true;
        case lexpr::kind::deref:
            if (changed) h_.refine(n.kids[0].v, n.e->tau, n.v);
            return true;
        case lexpr::kind::cast: return backward_cast(n);
        case lexpr::kind::un: return backward_un(n);
        case lexpr::kind::bin: return backward_bin(n);
        }
        return true;
    }

    // guard transfer: the edge keeps states where the condition is zero
    bool test_zero(anode& root) { return backward(root, zero_like(root.v)); }

    // conversion applied by a typed store, same semantics as a cast node
    abs_value convert(const abs_value& v, scalar_type to) {
        bool exact = true;
        return eval_cast(v, to, exact);
    }

    static abs_value zero_like(const abs_value& v) {
        if (v.t == scalar_type::ptr)
            return abs_value::of_ptr(base_set::single(base_ref::null()), numeric_value::top());
        if (is_float(v.t)) return abs_value::of_float(v.t, finterval::single(0.0));
        return abs_value::of_int(v.t, numeric_value::single(0));
    }

    static abs_value nonzero_trim(const abs_value& v) {
        abs_value r = v;
        if (v.t == scalar_type::ptr) {
            r.bases = r.bases.erase(base_ref::null());
            return r;
        }
        if (is_float(v.t)) return r; // cannot represent a hole around zero
        interval iv = r.num.iv;
        if (iv.lo == 0) iv.lo = 1;
        if (iv.hi == 0) iv.hi = -1;
        congruence cg = r.num.cg;
        if (cg.is_constant() && cg.r == 0) return abs_value::bottom_of(v.t);
        r.num = numeric_value::of(iv, cg);
        return r;
    }

    static bool can_zero(const abs_value& v) {
        if (v.is_bottom()) return false;
        if (v.t == scalar_type::ptr) return v.bases.contains(base_ref::null());
        if (is_float(v.t)) return v.fl.contains(0.0);
        return v.num.contains(0);
    }
    static bool can_nonzero(const abs_value& v) {
        if (v.is_bottom()) return false;
        if (v.t == scalar_type::ptr) {
            if (v.bases.top) return true;
            for (auto& b : v.bases.bases)
                if (!(b.k == base_ref::kind::null)) return true;
            return false;
        }
        if (is_float(v.t)) return v.fl.nan || v.fl.lo != 0 || v.fl.hi != 0;
        return !(v.num.is_single() && v.num.single_value() == 0);
    }

private:
    // ---- forward helpers ----

    abs_value eval_cast(const abs_value& src, scalar_type to, bool& exact) {
        const abi& ab = *h_.ab;
        if (to == scalar_type::ptr) {
            if (src.t == scalar_type::ptr) return src;
            // integer to pointer: zero is null, anything else is junk
            base_set b;
            if (can_zero(src)) b.bases.insert(base_ref::null());
            if (can_nonzero(src)) b.bases.insert(base_ref::omega());
            exact = false;
            return abs_value::of_ptr(b, numeric_value::top());
        }
        if (src.t == scalar_type::ptr) {
            exact = false;
            return abs_value::top_of(ab, to); // the front end rejects this form
        }
        if (is_float(to)) {
            exact = false;
            if (is_float(src.t)) {
                finterval f = src.fl;
                if (to == scalar_type::flt) f = f.to_float_precision();
                return abs_value::of_float(to, f);
            }
            finterval f;
            f.nan = false;
            f.bot = src.num.is_bottom();
            if (!f.bot) {
                f.lo = is_finite(src.num.iv.lo) ? finterval::down(double(src.num.iv.lo))
                                                : -std::numeric_limits<double>::infinity();
                f.hi = is_finite(src.num.iv.hi) ? finterval::up(double(src.num.iv.hi))
                                                : std::numeric_limits<double>::infinity();
            }
            if (to == scalar_type::flt) f = f.to_float_precision();
            return abs_value::of_float(to, f);
        }
        if (is_float(src.t)) {
            exact = false;
            const finterval& f = src.fl;
            if (f.is_bottom()) return abs_value::bottom_of(to);
            bool range_ok = !f.nan && std::isfinite(f.lo) && std::isfinite(f.hi);
            if (range_ok) {
                double tl = std::trunc(f.lo), th = std::trunc(f.hi);
                if (tl >= -9.2e18 && th <= 9.2e18) {
                    numeric_value nv = numeric_value::range(i128(int64_t(tl)), i128(int64_t(th)));
                    if (nv.iv.leq(interval::of_type(ab, to)))
                        return abs_value::of_int(to, nv);
                }
            }
            h_.alarm(alarm_kind::overflow, "float conversion may leave the integer range");
            return abs_value::top_of(ab, to);
        }
        // integer to integer wraps silently
        bool w = false;
        numeric_value nv = src.num.wrap_to(ab, to, &w);
        exact = !w;
        return abs_value::of_int(to, nv);
    }

    abs_value eval_un(lop op, scalar_type t, const abs_value& a, bool& exact) {
        const abi& ab = *h_.ab;
        switch (op) {
        case lop::lnot: {
            bool z = can_zero(a), nz = can_nonzero(a);
            numeric_value r = z && nz ? numeric_value::range(0, 1)
                                      : z ? numeric_value::single(1) : numeric_value::single(0);
            if (a.is_bottom()) r = numeric_value::bottom();
            exact = true;
            return abs_value::of_int(scalar_type::sint, r);
        }
        case lop::neg: {
            if (is_float(t)) return abs_value::of_float(t, a.fl.fneg());
            bool w = false;
            numeric_value nv = a.num.neg().wrap_to(ab, t, &w);
            if (w && is_signed_int(t)) h_.alarm(alarm_kind::overflow, "negation may wrap");
            exact = !w;
            return abs_value::of_int(t, nv);
        }
        case lop::bnot: {
            bool w = false;
            numeric_value nv = a.num.neg().sub(numeric_value::single(1)).wrap_to(ab, t, &w);
            exact = !w;
            return abs_value::of_int(t, nv);
        }
        default: break;
        }
        return abs_value::top_of(ab, t);
    }

    abs_value eval_bin(lop op, scalar_type t, anode& na, anode& nb, bool& exact) {
        const abi& ab = *h_.ab;
        const abs_value& a = na.v;
        const abs_value& b = nb.v;
        if (a.is_bottom() || b.is_bottom())
            return abs_value::bottom_of(op >= lop::eq && op <= lop::ge ? scalar_type::sint : t);
        switch (op) {
        case lop::eq:
        case lop::ne:
        case lop::lt:
        case lop::le:
        case lop::gt:
        case lop::ge: return compare(op, a, b);
        default: break;
        }
        if (t == scalar_type::ptr) return ptr_add(a, b);
        if (a.t == scalar_type::ptr && b.t == scalar_type::ptr && op == lop::sub)
            return ptr_diff(a, b, t, exact);
        if (is_float(t))
            return abs_value::of_float(t, a.fl.binop(op, b.fl));
        numeric_value x = a.num, y = b.num;
        numeric_value r;
        switch (op) {
        case lop::add: r = x.add(y); break;
        case lop::sub: r = x.sub(y); break;
        case lop::mul: r = x.mul(y); break;
        case lop::div:
        case lop::mod: {
            if (y.contains(0)) {
                h_.alarm(alarm_kind::div_by_zero, "divisor may be zero");
                abs_value ref = abs_value::of_int(b.t, nonzero_num(y));
                if (ref.is_bottom()) return abs_value::bottom_of(t);
                backward(nb, ref); // the run continues with a nonzero divisor
                y = nb.v.num;
            }
            r = op == lop::div ? x.div_trunc(y) : x.mod_trunc(y);
            break;
        }
        case lop::band: r = x.bit_and(y); break;
        case lop::bor: r = x.bit_or(y); break;
        case lop::bxor: r = x.bit_xor(y); break;
        case lop::shl:
        case lop::shr: {
            i128 w = 8 * ab.sizeof_(t);
            if (!y.iv.leq(interval::range(0, w - 1))) {
                h_.alarm(alarm_kind::shift_range, "shift count may be out of range");
                y = numeric_value::range(0, w - 1);
            }
            r = op == lop::shl ? x.shl(y) : x.shr(y);
            break;
        }
        default: r = numeric_value::top(); break;
        }
        bool wrapped = false;
        numeric_value rw = r.wrap_to(ab, t, &wrapped);
        if (wrapped && is_signed_int(t) && (op == lop::add || op == lop::sub || op == lop::mul || op == lop::shl || op == lop::div))
            h_.alarm(alarm_kind::overflow, "signed arithmetic may wrap");
        exact = !wrapped;
        return abs_value::of_int(t, rw);
    }

    static numeric_value nonzero_num(const numeric_value& v) {
        interval iv = v.iv;
        if (iv.lo == 0) iv.lo = 1;
        if (iv.hi == 0) iv.hi = -1;
        congruence cg = v.cg;
        if (cg.is_constant() && cg.r == 0) return numeric_value::bottom();
        return numeric_value::of(iv, cg);
    }

    abs_value compare(lop op, const abs_value& a, const abs_value& b) {
        int tri = compare_tri(op, a, b); // -1 unknown, 0 false, 1 true
        numeric_value r = tri < 0 ? numeric_value::range(0, 1) : numeric_value::single(tri);
        return abs_value::of_int(scalar_type::sint, r);
    }

    int compare_tri(lop op, const abs_value& a, const abs_value& b) {
        if (a.t == scalar_type::ptr || b.t == scalar_type::ptr) {
            if (a.t != scalar_type::ptr || b.t != scalar_type::ptr) return -1;
            bool same_single = !a.bases.top && !b.bases.top && a.bases.bases.size() == 1 &&
                               a.bases == b.bases;
            bool may_eq = may_alias(a, b);
            bool must_eq = a.bases.only(base_ref::null()) && b.bases.only(base_ref::null());
            if (!must_eq && same_single && a.bases.bases.begin()->k == base_ref::kind::var &&
                a.num.is_single() && b.num.is_single())
                must_eq = a.num.single_value() == b.num.single_value();
            switch (op) {
            case lop::eq: return must_eq ? 1 : may_eq ? -1 : 0;
            case lop::ne: return must_eq ? 0 : may_eq ? -1 : 1;
            default:
                // ordering is only meaningful within one object
                if (same_single && a.bases.bases.begin()->k == base_ref::kind::var) {
                    abs_value ia = abs_value::of_int(scalar_type::sllong, a.num);
                    abs_value ib = abs_value::of_int(scalar_type::sllong, b.num);
                    return compare_tri(op, ia, ib);
                }
                h_.alarm(alarm_kind::cross_base, "ordering of possibly unrelated pointers");
                return -1;
            }
        }
        if (is_float(a.t) || is_float(b.t)) {
            const finterval &x = a.fl, &y = b.fl;
            bool no_nan = !x.nan && !y.nan;
            switch (op) {
            case lop::lt:
                if (no_nan && x.hi < y.lo) return 1;
                if (x.lo >= y.hi) return 0; // NaN operands also compare false
                return -1;
            case lop::le:
                if (no_nan && x.hi <= y.lo) return 1;
                if (x.lo > y.hi) return 0;
                return -1;
            case lop::gt:
                if (no_nan && x.lo > y.hi) return 1;
                if (x.hi <= y.lo) return 0;
                return -1;
            case lop::ge:
                if (no_nan && x.lo >= y.hi) return 1;
                if (x.hi < y.lo) return 0;
                return -1;
            case lop::eq:
                if (no_nan && x.lo == x.hi && y.lo == y.hi && x.lo == y.lo) return 1;
                if (x.meet(y).is_bottom() || x.hi < y.lo || x.lo > y.hi) return 0;
                return -1;
            case lop::ne:
                if (x.hi < y.lo || x.lo > y.hi) return 1;
                if (no_nan && x.lo == x.hi && y.lo == y.hi && x.lo == y.lo) return 0;
                return -1;
            default: return -1;
            }
        }
        const numeric_value &x = a.num, &y = b.num;
        switch (op) {
        case lop::eq:
            if (x.is_single() && y.is_single()) return x.single_value() == y.single_value();
            return x.meet(y).is_bottom() ? 0 : -1;
        case lop::ne:
            if (x.is_single() && y.is_single()) return x.single_value() != y.single_value();
            return x.meet(y).is_bottom() ? 1 : -1;
        case lop::lt: return x.iv.hi < y.iv.lo ? 1 : x.iv.lo >= y.iv.hi ? 0 : -1;
        case lop::le: return x.iv.hi <= y.iv.lo ? 1 : x.iv.lo > y.iv.hi ? 0 : -1;
        case lop::gt: return x.iv.lo > y.iv.hi ? 1 : x.iv.hi <= y.iv.lo ? 0 : -1;
        case lop::ge: return x.iv.lo >= y.iv.hi ? 1 : x.iv.hi < y.iv.lo ? 0 : -1;
        default: return -1;
        }
    }

    static bool may_alias(const abs_value& a, const abs_value& b) {
        if (a.bases.top || b.bases.top) return true;
        for (auto& r : a.bases.bases) {
            if (!b.bases.contains(r)) continue;
            if (r.k != base_ref::kind::var) return true;
            if (!a.num.meet(b.num).is_bottom()) return true;
        }
        return false;
    }

    abs_value ptr_add(const abs_value& a, const abs_value& b) {
        numeric_value no = a.num.add(b.num);
        if (a.bases.top) {
            h_.alarm(alarm_kind::invalid_pointer, "arithmetic on an unknown pointer");
            return abs_value::of_ptr(base_set::all(), numeric_value::top());
        }
        base_set survivors;
        i128 max_size = -1;
        bool oob = false, bad = false;
        for (auto& r : a.bases.bases) {
            if (r.k != base_ref::kind::var) {
                bad = true;
                continue;
            }
            i128 sz = h_.base_size(r);
            numeric_value in = no.meet(numeric_value::range(0, sz));
            if (in.is_bottom()) {
                oob = true;
                continue;
            }
            if (!no.iv.leq(interval::range(0, sz))) oob = true;
            survivors.bases.insert(r);
            if (sz > max_size) max_size = sz;
        }
        if (bad) h_.alarm(alarm_kind::invalid_pointer, "arithmetic on a null or invalid pointer");
        if (oob) h_.alarm(alarm_kind::out_of_bounds, "pointer arithmetic may leave its object");
        if (survivors.is_bottom()) return abs_value::bottom_of(scalar_type::ptr);
        numeric_value off = no.meet(numeric_value::range(0, max_size));
        return abs_value::of_ptr(survivors, off);
    }

    abs_value ptr_diff(const abs_value& a, const abs_value& b, scalar_type t, bool& exact) {
        const abi& ab = *h_.ab;
        bool same_single = !a.bases.top && !b.bases.top && a.bases.bases.size() == 1 &&
                           a.bases == b.bases;
        if (!same_single)
            h_.alarm(alarm_kind::cross_base, "subtraction of possibly unrelated pointers");
        numeric_value d = a.num.sub(b.num);
        bool w = false;
        numeric_value r = d.wrap_to(ab, t, &w);
        exact = !w;
        return abs_value::of_int(t, r);
    }

    // ---- backward helpers ----

    bool backward_cast(anode& n) {
        anode& k = n.kids[0];
        const abi& ab = *h_.ab;
        scalar_type to = n.e->tau, from = k.v.t;
        if (to == scalar_type::ptr || from == scalar_type::ptr) return true;
        if (is_float(to) || is_float(from)) return true;
        if (!n.exact) return true;
        // a non-wrapping integer cast preserves the value
        (void)ab;
        return backward(k, abs_value::of_int(from, n.v.num));
    }

    bool backward_un(anode& n) {
        anode& k = n.kids[0];
        switch (n.e->op) {
        case lop::lnot: {
            if (n.v.num.is_single() && n.v.num.single_value() == 1)
                return backward(k, zero_like(k.v));
            if (n.v.num.is_single() && n.v.num.single_value() == 0) {
                abs_value nz = nonzero_trim(k.v);
                if (nz.is_bottom()) return false;
                return backward(k, nz);
            }
            return true;
        }
        case lop::neg: {
            if (is_float(n.v.t) || !n.exact) return true;
            return backward(k, abs_value::of_int(k.v.t, n.v.num.neg()));
        }
        case lop::bnot: {
            if (!n.exact) return true;
            return backward(k, abs_value::of_int(k.v.t, n.v.num.neg().sub(numeric_value::single(1))));
        }
        default: return true;
        }
    }

    bool backward_bin(anode& n) {
        anode& ka = n.kids[0];
        anode& kb = n.kids[1];
        lop op = n.e->op;
        if (op >= lop::eq && op <= lop::ge) {
            if (n.v.num.is_single() && n.v.num.single_value() == 1)
                return refine_relation(op, ka, kb);
            if (n.v.num.is_single() && n.v.num.single_value() == 0)
                return refine_relation(negate_rel(op), ka, kb);
            return true;
        }
        if (n.v.t == scalar_type::ptr || ka.v.t == scalar_type::ptr) return true;
        if (is_float(n.v.t)) return true;
        if (!n.exact) return true;
        const numeric_value& res = n.v.num;
        switch (op) {
        case lop::add: {
            if (!backward(ka, abs_value::of_int(ka.v.t, res.sub(kb.v.num)))) return false;
            return backward(kb, abs_value::of_int(kb.v.t, res.sub(ka.v.num)));
        }
        case lop::sub: {
            if (!backward(ka, abs_value::of_int(ka.v.t, res.add(kb.v.num)))) return false;
            return backward(kb, abs_value::of_int(kb.v.t, ka.v.num.sub(res)));
        }
        case lop::mul: {
            if (kb.v.num.is_single() && kb.v.num.single_value() != 0) {
                numeric_value q = exact_div(res, kb.v.num.single_value());
                if (!backward(ka, abs_value::of_int(ka.v.t, q))) return false;
            }
            return true;
        }
        case lop::div: {
            // truncating division by a positive constant with a nonnegative
            // dividend: dividend in [q.lo*c, q.hi*c + c - 1]
            if (kb.v.num.is_single() && kb.v.num.single_value() > 0 && ka.v.num.iv.lo >= 0) {
                i128 c = kb.v.num.single_value();
                interval iv = res.iv;
                if (!iv.is_bottom() && iv.lo >= 0) {
                    i128 lo = is_finite(iv.lo) ? iv.lo * c : kNegInf;
                    i128 hi = is_finite(iv.hi) ? iv.hi * c + c - 1 : kPosInf;
                    numeric_value want = numeric_value::of(interval::range(lo, hi), congruence::top());
                    return backward(ka, abs_value::of_int(ka.v.t, want));
                }
            }
            return true;
        }
        default: return true;
        }
    }

    static numeric_value exact_div(const numeric_value& v, i128 c) {
        // x with x*c in v: ceil/floor of the bounds
        if (v.is_bottom()) return numeric_value::bottom();
        i128 lo, hi;
        if (c > 0) {
            lo = is_finite(v.iv.lo) ? ceil_div(v.iv.lo, c) : kNegInf;
            hi = is_finite(v.iv.hi) ? floor_div(v.iv.hi, c) : kPosInf;
        } else {
            lo = is_finite(v.iv.hi) ? ceil_div(v.iv.hi, c) : kNegInf;
            hi = is_finite(v.iv.lo) ? floor_div(v.iv.lo, c) : kPosInf;
        }
        return numeric_value::of(interval::range(lo, hi), v.cg.div_const(c));
    }

    static i128 ceil_div(i128 a, i128 b) { return -floor_div(-a, b); }

    static lop negate_rel(lop op) {
        switch (op) {
        case lop::eq: return lop::ne;
        case lop::ne: return lop::eq;
        case lop::lt: return lop::ge;
        case lop::le: return lop::gt;
        case lop::gt: return lop::le;
        case lop::ge: return lop::lt;
        default: return op;
        }
    }

    bool refine_relation(lop op, anode& ka, anode& kb) {
        abs_value& a = ka.v;
        abs_value& b = kb.v;
        if (a.t == scalar_type::ptr && b.t == scalar_type::ptr) {
            if (op == lop::eq) {
                abs_value m = a.meet(b);
                if (m.is_bottom()) return false;
                if (!backward(ka, m)) return false;
                return backward(kb, m);
            }
            if (op == lop::ne) {
                if (b.bases.only(base_ref::null())) {
                    abs_value nz = nonzero_trim(a);
                    if (nz.is_bottom()) return false;
                    if (!backward(ka, nz)) return false;
                }
                if (a.bases.only(base_ref::null())) {
                    abs_value nz = nonzero_trim(b);
                    if (nz.is_bottom()) return false;
                    return backward(kb, nz);
                }
                return true;
            }
            // same-object ordering refines the offsets
            bool same_single = !a.bases.top && !b.bases.top && a.bases.bases.size() == 1 &&
                               a.bases == b.bases &&
                               a.bases.bases.begin()->k == base_ref::kind::var;
            if (!same_single) return true;
            const interval &pa = a.num.iv, &pb = b.num.iv;
            switch (op) {
            case lop::lt:
                return order_refine(ka, kb, pb.hi == kPosInf ? kPosInf : pb.hi - 1,
                                    pa.lo == kNegInf ? kNegInf : pa.lo + 1);
            case lop::le: return order_refine(ka, kb, pb.hi, pa.lo);
            case lop::gt:
                return order_refine(kb, ka, pa.hi == kPosInf ? kPosInf : pa.hi - 1,
                                    pb.lo == kNegInf ? kNegInf : pb.lo + 1);
            case lop::ge: return order_refine(kb, ka, pa.hi, pb.lo);
            default: return true;
            }
        }
        if (is_float(a.t) || is_float(b.t)) {
            if (a.t != b.t) return true;
            // only the guaranteed-not-NaN true relations refine
            switch (op) {
            case lop::eq: {
                abs_value m = a.meet(b);
                m.fl.nan = false;
                if (m.is_bottom()) return false;
                if (!backward(ka, m)) return false;
                return backward(kb, m);
            }
            case lop::lt:
            case lop::le: {
                finterval fa = a.fl, fb = b.fl;
                fa.nan = false;
                fb.nan = false;
                fa.hi = std::min(fa.hi, fb.hi);
                fb.lo = std::max(fb.lo, fa.lo);
                if (fa.is_bottom() || fb.is_bottom()) return false;
                if (!backward(ka, abs_value::of_float(a.t, fa))) return false;
                return backward(kb, abs_value::of_float(b.t, fb));
            }
            case lop::gt:
            case lop::ge: {
                finterval fa = a.fl, fb = b.fl;
                fa.nan = false;
                fb.nan = false;
                fa.lo = std::max(fa.lo, fb.lo);
                fb.hi = std::min(fb.hi, fa.hi);
                if (fa.is_bottom() || fb.is_bottom()) return false;
                if (!backward(ka, abs_value::of_float(a.t, fa))) return false;
                return backward(kb, abs_value::of_float(b.t, fb));
            }
            default: return true;
            }
        }
        if (a.t == scalar_type::ptr || b.t == scalar_type::ptr) return true;
        const interval &xa = a.num.iv, &xb = b.num.iv;
        switch (op) {
        case lop::eq: {
            numeric_value m = a.num.meet(b.num);
            if (m.is_bottom()) return false;
            if (!backward(ka, abs_value::of_int(a.t, m))) return false;
            return backward(kb, abs_value::of_int(b.t, m));
        }
        case lop::ne: {
            if (b.num.is_single()) {
                abs_value t = trim_point(a, b.num.single_value());
                if (t.is_bottom()) return false;
                if (!backward(ka, t)) return false;
            }
            if (a.num.is_single()) {
                abs_value t = trim_point(b, a.num.single_value());
                if (t.is_bottom()) return false;
                return backward(kb, t);
            }
            return true;
        }
        case lop::lt:
            return order_refine(ka, kb, xb.hi == kPosInf ? kPosInf : xb.hi - 1,
                                xa.lo == kNegInf ? kNegInf : xa.lo + 1);
        case lop::le: return order_refine(ka, kb, xb.hi, xa.lo);
        case lop::gt: {
            bool ok = order_refine(kb, ka, xa.hi == kPosInf ? kPosInf : xa.hi - 1,
                                   xb.lo == kNegInf ? kNegInf : xb.lo + 1);
            return ok;
        }
        case lop::ge: return order_refine(kb, ka, xa.hi, xb.lo);
        default: return true;
        }
    }

    // the node's value with a replaced numeric part, keeping its kind
    static abs_value with_num(const abs_value& v, numeric_value n) {
        if (v.t == scalar_type::ptr) return abs_value::of_ptr(v.bases, n);
        return abs_value::of_int(v.t, n);
    }

    // a <= bound_a and b >= bound_b
    bool order_refine(anode& ka, anode& kb, i128 hi_a, i128 lo_b) {
        numeric_value na =
            ka.v.num.meet(numeric_value::of(interval::range(kNegInf, hi_a), congruence::top()));
        if (na.is_bottom()) return false;
        if (!backward(ka, with_num(ka.v, na))) return false;
        numeric_value nb =
            kb.v.num.meet(numeric_value::of(interval::range(lo_b, kPosInf), congruence::top()));
        if (nb.is_bottom()) return false;
        return backward(kb, with_num(kb.v, nb));
    }

    static abs_value trim_point(const abs_value& v, i128 p) {
        abs_value r = v;
        interval iv = r.num.iv;
        if (iv.lo == p) iv.lo = p + 1;
        if (iv.hi == p) iv.hi = p - 1;
        congruence cg = r.num.cg;
        if (cg.is_constant() && cg.r == p) return abs_value::bottom_of(v.t);
        r.num = numeric_value::of(iv, cg);
        return r;
    }

    aeval_hooks h_;
};

} // namespace cellscope
