#pragma once

#include <set>

#include "cfg.hpp"
#include "numeric.hpp"
#include "values.hpp"

namespace cellscope {

// Set of memory bases a pointer may carry. Null, omega (invalid), variables
// and functions are all bases; the offset lives in a numeric dimension next
// to this set and only constrains variable bases.
struct base_set {
    bool top = false;
    std::set<base_ref> bases;

    static base_set all() {
        base_set b;
        b.top = true;
        return b;
    }
    static base_set none() { return {}; }
    static base_set single(base_ref r) {
        base_set b;
        b.bases.insert(r);
        return b;
    }

    bool is_bottom() const { return !top && bases.empty(); }
    bool contains(base_ref r) const { return top || bases.count(r) != 0; }
    bool only(base_ref r) const { return !top && bases.size() == 1 && *bases.begin() == r; }

    bool leq(const base_set& o) const {
        if (o.top) return true;
        if (top) return false;
        for (auto& b : bases)
            if (!o.bases.count(b)) return false;
        return true;
    }
    bool operator==(const base_set& o) const { return leq(o) && o.leq(*this); }

    base_set join(const base_set& o) const {
        if (top || o.top) return all();
        base_set r = *this;
        r.bases.insert(o.bases.begin(), o.bases.end());
        return r;
    }
    base_set meet(const base_set& o) const {
        if (top) return o;
        if (o.top) return *this;
        base_set r;
        for (auto& b : bases)
            if (o.bases.count(b)) r.bases.insert(b);
        return r;
    }
    base_set erase(base_ref r) const {
        if (top) return *this;
        base_set out = *this;
        out.bases.erase(r);
        return out;
    }
};

// Abstract value of one scalar cell, dispatched on the cell type: integers
// use the interval-congruence product, floats use float intervals, pointers
// pair a base set with a numeric offset.
struct abs_value {
    scalar_type t = scalar_type::sint;
    numeric_value num;
    finterval fl;
    base_set bases;

    static abs_value of_int(scalar_type ty, numeric_value n) {
        abs_value v;
        v.t = ty;
        v.num = n;
        return v;
    }
    static abs_value of_float(scalar_type ty, finterval f) {
        abs_value v;
        v.t = ty;
        v.fl = f;
        v.num = numeric_value::bottom();
        return v;
    }
    static abs_value of_ptr(base_set b, numeric_value off) {
        abs_value v;
        v.t = scalar_type::ptr;
        v.bases = b;
        v.num = off;
        return v;
    }
    static abs_value top_of(const abi& a, scalar_type ty) {
        if (ty == scalar_type::ptr) return of_ptr(base_set::all(), numeric_value::top());
        if (is_float(ty)) return of_float(ty, finterval::top());
        return of_int(ty, numeric_value::of_type(a, ty));
    }
    static abs_value bottom_of(scalar_type ty) {
        if (ty == scalar_type::ptr) return of_ptr(base_set::none(), numeric_value::bottom());
        if (is_float(ty)) return of_float(ty, finterval::bottom());
        return of_int(ty, numeric_value::bottom());
    }

    bool is_bottom() const {
        if (t == scalar_type::ptr) return bases.is_bottom();
        if (is_float(t)) return fl.is_bottom();
        return num.is_bottom();
    }

    bool is_top_of(const abi& a) const { return top_of(a, t).leq(*this); }

    bool leq(const abs_value& o) const {
        if (t != o.t) return false;
        if (is_bottom()) return true;
        if (t == scalar_type::ptr) {
            if (!bases.leq(o.bases)) return false;
            // the offset constrains only variable bases
            if (has_var_base() && !num.leq(o.num)) return false;
            return true;
        }
        if (is_float(t)) return fl.leq(o.fl);
        return num.leq(o.num);
    }
    bool operator==(const abs_value& o) const { return leq(o) && o.leq(*this); }

    bool has_var_base() const {
        if (t != scalar_type::ptr) return false;
        if (bases.top) return true;
        for (auto& b : bases.bases)
            if (b.k == base_ref::kind::var) return true;
        return false;
    }

    abs_value join(const abs_value& o) const {
        if (is_bottom()) return o;
        if (o.is_bottom()) return *this;
        abs_value r = *this;
        if (t == scalar_type::ptr) {
            r.bases = bases.join(o.bases);
            bool lv = has_var_base(), rv = o.has_var_base();
            r.num = lv && rv ? num.join(o.num) : lv ? num : rv ? o.num : numeric_value::bottom();
        } else if (is_float(t)) {
            r.fl = fl.join(o.fl);
        } else {
            r.num = num.join(o.num);
        }
        return r;
    }

    abs_value meet(const abs_value& o) const {
        if (is_bottom() || o.is_bottom()) return bottom_of(t);
        abs_value r = *this;
        if (t == scalar_type::ptr) {
            r.bases = bases.meet(o.bases);
            r.num = num.meet(o.num);
            if (r.bases.is_bottom()) return bottom_of(t);
            if (r.has_var_base() && r.num.is_bottom()) {
                // no var base can satisfy the offsets; drop them
                base_set keep;
                if (!r.bases.top) {
                    for (auto& b : r.bases.bases)
                        if (b.k != base_ref::kind::var) keep.bases.insert(b);
                    r.bases = keep;
                    if (r.bases.is_bottom()) return bottom_of(t);
                }
            }
        } else if (is_float(t)) {
            r.fl = fl.meet(o.fl);
            if (r.fl.is_bottom()) return bottom_of(t);
        } else {
            r.num = num.meet(o.num);
            if (r.num.is_bottom()) return bottom_of(t);
        }
        return r;
    }

    abs_value widen(const abs_value& next, uint32_t step, uint32_t cong_delay) const {
        if (is_bottom()) return next;
        if (next.is_bottom()) return *this;
        abs_value r = *this;
        if (t == scalar_type::ptr) {
            r.bases = bases.join(next.bases);
            bool lv = has_var_base(), rv = next.has_var_base();
            r.num = lv && rv ? num.widen(next.num, step, cong_delay)
                             : lv ? num : rv ? next.num : numeric_value::bottom();
        } else if (is_float(t)) {
            r.fl = fl.widen(next.fl);
        } else {
            r.num = num.widen(next.num, step, cong_delay);
        }
        return r;
    }

    // membership of one concrete scalar
    bool contains(const scalar_value& v) const {
        if (v.t != t) return false;
        if (t == scalar_type::ptr) {
            if (!bases.contains(v.pb)) return false;
            if (v.pb.k == base_ref::kind::var) return num.contains(v.po);
            return true;
        }
        if (is_float(t)) return fl.contains(v.f);
        return num.contains(v.i);
    }
};

} // namespace cellscope
