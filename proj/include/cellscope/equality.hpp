#pragma once

#include <map>
#include <sstream>

#include "values.hpp"

namespace cellscope {

// Byte-zone equality predicates: a binding keyed by source variable V with
// payload (s, w, d, l) asserts that the l bytes of V starting at s equal the
// l bytes of w starting at d. An absent key is top (no assertion). The order
// is by implied constraint: a state is below another when it asserts at least
// as much, so the join intersects zones and the lattice ascends by shrinking
// them.
struct eq_binding {
    uint32_t s = 0;
    var_id w = kNoVar;
    uint32_t d = 0;
    uint32_t l = 0;

    bool operator==(const eq_binding& o) const {
        return s == o.s && w == o.w && d == o.d && l == o.l;
    }
    // byte shift from source offsets to destination offsets
    int64_t shift() const { return int64_t(d) - int64_t(s); }
};

struct equality_state {
    std::map<var_id, eq_binding> b;

    static bool ranges_meet(uint32_t lo1, uint32_t n1, uint32_t lo2, uint32_t n2) {
        return lo1 < lo2 + n2 && lo2 < lo1 + n1;
    }

    // a write to bytes [off, off+n) of W invalidates intersecting zones
    void clear_write(var_id W, uint32_t off, uint32_t n) {
        for (auto it = b.begin(); it != b.end();) {
            const eq_binding& e = it->second;
            bool hit = (it->first == W && ranges_meet(e.s, e.l, off, n)) ||
                       (e.w == W && ranges_meet(e.d, e.l, off, n));
            it = hit ? b.erase(it) : ++it;
        }
    }

    // any write to W whose range is unknown, and variable deletion
    void clear_var(var_id W) {
        for (auto it = b.begin(); it != b.end();) {
            bool hit = it->first == W || it->second.w == W;
            it = hit ? b.erase(it) : ++it;
        }
    }

    // everything is possibly written: drop all assertions
    void clear_all() { b.clear(); }

    // A resolved copy of l2 bytes from (V, s2) to (W2, d2). Grows an existing
    // zone when the new window extends it at either end under the same shift,
    // otherwise replaces the binding; always drops every other binding that
    // involves the modified variable.
    void transfer_copy(var_id V, uint32_t s2, var_id W2, uint32_t d2, uint32_t l2) {
        for (auto it = b.begin(); it != b.end();) {
            bool other = it->first != V && (it->first == W2 || it->second.w == W2);
            it = other ? b.erase(it) : ++it;
        }
        if (V == W2 || l2 == 0) {
            b.erase(V);
            return;
        }
        auto it = b.find(V);
        if (it != b.end()) {
            eq_binding& e = it->second;
            if (e.w == W2 && e.shift() == int64_t(d2) - int64_t(s2)) {
                if (s2 >= e.s && s2 <= e.s + e.l) { // extend at the end
                    e.l = std::max(e.l, s2 + l2 - e.s);
                    return;
                }
                if (e.s >= s2 && e.s <= s2 + l2) { // extend at the start
                    uint32_t nl = std::max(l2, e.s + e.l - s2);
                    e = {s2, W2, d2, nl};
                    return;
                }
            }
            // if the old binding pointed at W2 its zone died with the write
            // above only for other keys; the replacement below covers V
        }
        b[V] = {s2, W2, d2, l2};
    }

    bool leq(const equality_state& o) const {
        for (auto& [v, eo] : o.b) {
            auto it = b.find(v);
            if (it == b.end()) return false;
            const eq_binding& e = it->second;
            if (e.w != eo.w || e.shift() != eo.shift()) return false;
            if (!(eo.s >= e.s && eo.s + eo.l <= e.s + e.l)) return false;
        }
        return true;
    }
    bool operator==(const equality_state& o) const { return b == o.b; }

    // least upper bound: per key the maximal common sub-zone, top otherwise
    equality_state lub(const equality_state& o) const {
        equality_state r;
        for (auto& [v, e1] : b) {
            auto it = o.b.find(v);
            if (it == o.b.end()) continue;
            const eq_binding& e2 = it->second;
            if (e1.w != e2.w || e1.shift() != e2.shift()) continue;
            uint32_t lo = std::max(e1.s, e2.s);
            uint32_t hi = std::min(e1.s + e1.l, e2.s + e2.l);
            if (lo >= hi) continue;
            r.b[v] = {lo, e1.w, uint32_t(int64_t(lo) + e1.shift()), hi - lo};
        }
        return r;
    }

    // concrete check: every asserted byte pair is equal in memory
    bool gamma_holds(const std::map<var_id, std::vector<cbyte>>& store) const {
        for (auto& [v, e] : b) {
            auto si = store.find(v);
            auto di = store.find(e.w);
            if (si == store.end() || di == store.end()) return false;
            if (e.s + e.l > si->second.size() || e.d + e.l > di->second.size()) return false;
            for (uint32_t i = 0; i < e.l; ++i) {
                const cbyte& x = si->second[e.s + i];
                const cbyte& y = di->second[e.d + i];
                if (x.k == cbyte::kind::piece || y.k == cbyte::kind::piece) {
                    if (!(x.k == y.k && x.pb == y.pb && x.po == y.po && x.idx == y.idx))
                        return false;
                } else if (x.v != y.v) {
                    return false;
                }
            }
        }
        return true;
    }

    std::string dump(const cfg& g) const {
        std::ostringstream os;
        for (auto& [v, e] : b)
            os << "eq: " << g.vars[v].name << " -> (" << e.s << ", " << g.vars[e.w].name << ", "
               << e.d << ", " << e.l << ")\n";
        return os.str();
    }
};

} // namespace cellscope
