#pragma once

#include <algorithm>
#include <functional>
#include <sstream>

#include "aeval.hpp"
#include "equality.hpp"

namespace cellscope {

struct analysis_config {
    uint32_t widen_delay = 2;
    uint32_t cong_delay = 2;
    uint32_t unroll = 64;
    uint32_t fanout = 64;
    uint64_t max_iters = 1u << 20;
    bool disable_overlap_removal = false; // negative-control knob for the harness
    std::map<var_id, std::pair<i128, i128>> inputs; // volatile ranges
};

struct cell_key {
    var_id v = kNoVar;
    uint32_t off = 0;
    scalar_type t = scalar_type::sint;

    bool operator<(const cell_key& o) const {
        if (v != o.v) return v < o.v;
        if (off != o.off) return off < o.off;
        return t < o.t;
    }
    bool operator==(const cell_key& o) const { return v == o.v && off == o.off && t == o.t; }
};

// Must-written byte ranges of one variable: sorted disjoint half-open spans.
struct byte_ranges {
    std::vector<std::pair<uint32_t, uint32_t>> r;

    void add(uint32_t lo, uint32_t hi) {
        if (lo >= hi) return;
        std::vector<std::pair<uint32_t, uint32_t>> out;
        for (auto& [a, b] : r) {
            if (b < lo || a > hi) {
                out.push_back({a, b});
            } else {
                lo = std::min(lo, a);
                hi = std::max(hi, b);
            }
        }
        out.push_back({lo, hi});
        std::sort(out.begin(), out.end());
        r = std::move(out);
    }
    void remove(uint32_t lo, uint32_t hi) {
        if (lo >= hi) return;
        std::vector<std::pair<uint32_t, uint32_t>> out;
        for (auto& [a, b] : r) {
            if (b <= lo || a >= hi) {
                out.push_back({a, b});
                continue;
            }
            if (a < lo) out.push_back({a, lo});
            if (b > hi) out.push_back({hi, b});
        }
        r = std::move(out);
    }
    bool covers(uint32_t lo, uint32_t hi) const {
        if (lo >= hi) return true;
        for (auto& [a, b] : r)
            if (a <= lo && hi <= b) return true;
        return false;
    }
    bool intersects(uint32_t lo, uint32_t hi) const {
        for (auto& [a, b] : r)
            if (a < hi && lo < b) return true;
        return false;
    }
    byte_ranges meet(const byte_ranges& o) const {
        byte_ranges out;
        for (auto& [a, b] : r)
            for (auto& [c, d] : o.r) {
                uint32_t lo = std::max(a, c), hi = std::min(b, d);
                if (lo < hi) out.add(lo, hi);
            }
        return out;
    }
    bool superset_of(const byte_ranges& o) const {
        for (auto& [a, b] : o.r)
            if (!covers(a, b)) return false;
        return true;
    }
    bool operator==(const byte_ranges& o) const { return r == o.r; }
    bool empty() const { return r.empty(); }
};

// A realization relation remembers how a derived cell was initialized from
// overlapping cells, so guards can refine through it in both directions. The
// relations are tautologies over the underlying bytes; they carry precision,
// not constraints, and may be dropped freely.
struct relation {
    enum class kind : uint8_t { extract, compose, null_link, sign_link };
    kind k = kind::extract;
    cell_key derived;
    std::vector<cell_key> parents;
    std::vector<uint32_t> pos; // little-endian byte position of each parent

    bool touches(const cell_key& c) const {
        if (derived == c) return true;
        for (auto& p : parents)
            if (p == c) return true;
        return false;
    }
    bool operator==(const relation& o) const {
        return k == o.k && derived == o.derived && parents == o.parents && pos == o.pos;
    }
};

struct deref_site {
    std::vector<cell_key> cells;
    bool degrade = false; // fan-out exceeded or unknown base: treat as anything
};

// Abstract memory: a dynamic set of scalar cells over the byte-level store,
// under intersection semantics (a concrete memory must satisfy every live
// cell at once), plus must-written ranges, realization relations, and the
// byte-equality zones.
struct memory_state {
    bool bot = false;
    std::map<cell_key, abs_value> cells;
    // bytes possibly targeted by a write on some path (union at joins);
    // blocks the static-zero realization
    std::map<var_id, byte_ranges> written;
    // bytes certainly holding written data on every path (intersection at
    // joins); suppresses uninitialized-read alarms
    std::map<var_id, byte_ranges> must_init;
    std::vector<relation> rels;
    equality_state eq;

    static memory_state bottom() {
        memory_state m;
        m.bot = true;
        return m;
    }

    bool is_bottom() const { return bot; }

    // ---- basic cell plumbing ----

    uint32_t csize(const abi& ab, const cell_key& c) const { return ab.sizeof_(c.t); }

    static bool overlap(const abi& ab, const cell_key& a, const cell_key& b) {
        if (a.v != b.v) return false;
        return a.off < b.off + ab.sizeof_(b.t) && b.off < a.off + ab.sizeof_(a.t);
    }

    void drop_relations_touching(const cell_key& c) {
        rels.erase(std::remove_if(rels.begin(), rels.end(),
                                  [&](const relation& r) { return r.touches(c); }),
                   rels.end());
    }

    void remove_cell(const cell_key& c) {
        cells.erase(c);
        drop_relations_touching(c);
    }

    // every cell of `v` and every pointer that may still reference it
    void delete_var(var_id v) {
        for (auto it = cells.begin(); it != cells.end();) {
            if (it->first.v == v) {
                drop_relations_touching(it->first);
                it = cells.erase(it);
            } else {
                ++it;
            }
        }
        base_ref dead = base_ref::var(v);
        for (auto& [k, val] : cells) {
            if (val.t == scalar_type::ptr && !val.bases.top && val.bases.contains(dead)) {
                val.bases = val.bases.erase(dead);
                val.bases.bases.insert(base_ref::omega());
            }
        }
        written.erase(v);
        must_init.erase(v);
        eq.clear_var(v);
    }

    void create_var(var_id v) {
        delete_var(v); // clears any stale state from a previous activation
    }

    // a write whose destination is unknown: any byte may have changed
    void havoc_all(const cfg& g) {
        cells.clear();
        rels.clear();
        eq.clear_all();
        for (auto& v : g.vars)
            if (v.size > 0) written[v.id].add(0, v.size);
    }

    // ---- realization ----

    // Realizes (adds) the cell, initializing it from overlapping cells by the
    // first matching pattern; `depth` guards the single permitted
    // intermediate realization.
    void realize(const cfg& g, const abi& ab, const cell_key& c, int depth = 0) {
        if (bot || cells.count(c)) return;
        uint32_t s = ab.sizeof_(c.t);
        abs_value init = abs_value::top_of(ab, c.t);

        // P2: byte extraction from a covering unsigned cell
        if (is_integer(c.t)) {
            const cell_key* best = nullptr;
            for (auto& [k, val] : cells) {
                if (k.v != c.v || !is_unsigned_int(k.t)) continue;
                uint32_t ks = ab.sizeof_(k.t);
                if (!(k.off <= c.off && c.off + s <= k.off + ks)) continue;
                if (k.off == c.off && ks == s) continue; // P4 handles siblings
                if (!best || ab.sizeof_(best->t) > ks || (ab.sizeof_(best->t) == ks && k < *best))
                    best = &k;
            }
            if (best) {
                cell_key parent = *best;
                uint32_t ks = ab.sizeof_(parent.t);
                uint32_t delta = ab.endian == endianness::little
                                     ? c.off - parent.off
                                     : (parent.off + ks) - (c.off + s);
                init = extract_value(ab, cells[parent], delta, s, c.t);
                cells[c] = init;
                relation r;
                r.k = relation::kind::extract;
                r.derived = c;
                r.parents = {parent};
                r.pos = {delta};
                rels.push_back(r);
                return;
            }
        }

        // P3: composition of an exact tiling by smaller unsigned cells
        if (is_unsigned_int(c.t)) {
            std::vector<cell_key> parts;
            uint32_t pos = c.off;
            while (pos < c.off + s) {
                const cell_key* found = nullptr;
                for (auto& [k, val] : cells) {
                    if (k.v != c.v || k.off != pos || !is_unsigned_int(k.t)) continue;
                    uint32_t ks = ab.sizeof_(k.t);
                    if (pos + ks > c.off + s || ks == s) continue;
                    if (!found || ab.sizeof_(found->t) < ks) found = &k;
                }
                if (!found) break;
                parts.push_back(*found);
                pos += ab.sizeof_(found->t);
            }
            if (pos == c.off + s && !parts.empty()) {
                relation r;
                r.k = relation::kind::compose;
                r.derived = c;
                numeric_value sum = numeric_value::single(0);
                for (auto& p : parts) {
                    uint32_t ps = ab.sizeof_(p.t);
                    uint32_t d = ab.endian == endianness::little
                                     ? p.off - c.off
                                     : (c.off + s) - (p.off + ps);
                    sum = sum.add(cells[p].num.mul(numeric_value::single(ipow256(d))));
                    r.parents.push_back(p);
                    r.pos.push_back(d);
                }
                init = abs_value::of_int(c.t, sum.meet(numeric_value::of_type(ab, c.t)));
                cells[c] = init;
                rels.push_back(r);
                return;
            }
        }

        // P4: same-size signed/unsigned sibling
        if (is_integer(c.t)) {
            cell_key sib{c.v, c.off, toggle_sign(c.t)};
            auto it = cells.find(sib);
            if (it != cells.end()) {
                init = abs_value::of_int(c.t, it->second.num.wrap_to(ab, c.t));
                cells[c] = init;
                relation r;
                r.k = relation::kind::sign_link;
                r.derived = c;
                r.parents = {sib};
                rels.push_back(r);
                return;
            }
        }

        // P5: zero integer <-> null pointer at the same window
        if (c.t == scalar_type::ptr) {
            for (auto& [k, val] : cells) {
                if (k.v != c.v || k.off != c.off || !is_integer(k.t)) continue;
                if (ab.sizeof_(k.t) != s) continue;
                if (val.num.is_single() && val.num.single_value() == 0)
                    init = abs_value::of_ptr(base_set::single(base_ref::null()),
                                             numeric_value::top());
                cells[c] = init;
                relation r;
                r.k = relation::kind::null_link;
                r.derived = c;
                r.parents = {k};
                rels.push_back(r);
                return;
            }
        } else if (is_integer(c.t)) {
            cell_key pk{c.v, c.off, scalar_type::ptr};
            auto it = cells.find(pk);
            if (it != cells.end() && ab.sizeof_(scalar_type::ptr) == s) {
                if (it->second.bases.only(base_ref::null()))
                    init = abs_value::of_int(c.t, numeric_value::single(0));
                else if (!it->second.bases.contains(base_ref::null()) && is_unsigned_int(c.t))
                    init = abs_value::of_int(
                        c.t, numeric_value::range(1, ab.type_max(c.t)));
                cells[c] = init;
                relation r;
                r.k = relation::kind::null_link;
                r.derived = pk; // canonical orientation: pointer side derived
                r.parents = {c};
                rels.push_back(r);
                return;
            }
        }

        // P6: unwritten bytes of a static variable still hold their zeros
        const variable& info = g.vars[c.v];
        if (info.is_static && !written_of(c.v).intersects(c.off, c.off + s)) {
            if (c.t == scalar_type::ptr)
                init = abs_value::of_ptr(base_set::single(base_ref::null()), numeric_value::top());
            else if (is_float(c.t))
                init = abs_value::of_float(c.t, finterval::single(0.0));
            else
                init = abs_value::of_int(c.t, numeric_value::single(0));
            cells[c] = init;
            return;
        }

        // one intermediate realization bridges the remaining gaps
        if (depth == 0) {
            if (is_signed_int(c.t)) {
                cell_key sib{c.v, c.off, toggle_sign(c.t)};
                if (realizable(g, ab, sib)) {
                    realize(g, ab, sib, 1);
                    realize(g, ab, c, 1); // P4 now applies
                    return;
                }
            }
            if (c.t == scalar_type::ptr || is_integer(c.t)) {
                scalar_type addr = ab.address_type();
                if (ab.sizeof_(addr) == s) {
                    cell_key mid{c.v, c.off, addr};
                    if (!(mid == c) && realizable(g, ab, mid)) {
                        realize(g, ab, mid, 1);
                        realize(g, ab, c, 1);
                        return;
                    }
                }
            }
        }
        cells[c] = init;
    }

    // whether realize() would find a pattern (used to decide if an
    // intermediate cell is worth creating)
    bool realizable(const cfg& g, const abi& ab, const cell_key& c) const {
        if (cells.count(c)) return true;
        uint32_t s = ab.sizeof_(c.t);
        for (auto& [k, val] : cells) {
            if (k.v != c.v) continue;
            uint32_t ks = ab.sizeof_(k.t);
            if (is_integer(c.t) && is_unsigned_int(k.t) && k.off <= c.off &&
                c.off + s <= k.off + ks && !(k.off == c.off && ks == s))
                return true;
            if (is_integer(c.t) && k.off == c.off && ks == s && k.t == toggle_sign(c.t))
                return true;
        }
        const variable& info = g.vars[c.v];
        if (info.is_static && !written_of(c.v).intersects(c.off, c.off + s)) return true;
        return false;
    }

    const byte_ranges& written_of(var_id v) const {
        static const byte_ranges none;
        auto it = written.find(v);
        return it == written.end() ? none : it->second;
    }

    const byte_ranges& must_init_of(var_id v) const {
        static const byte_ranges none;
        auto it = must_init.find(v);
        return it == must_init.end() ? none : it->second;
    }

    static abs_value extract_value(const abi& ab, const abs_value& parent, uint32_t delta,
                                   uint32_t size, scalar_type to) {
        numeric_value nv = parent.num;
        if (delta > 0) nv = nv.div_trunc(numeric_value::single(ipow256(delta)));
        nv = nv.mod_trunc(numeric_value::single(ipow256(size)));
        return abs_value::of_int(to, nv.wrap_to(ab, to));
    }

    // ---- relation re-application ----

    // Meets every related cell against the value implied by its relation;
    // relations are byte-level tautologies so this always refines soundly.
    void apply_relations(const abi& ab) {
        if (bot) return;
        for (int pass = 0; pass < 4; ++pass) {
            bool changed = false;
            for (auto& r : rels) {
                if (!cells.count(r.derived)) continue;
                bool alive = true;
                for (auto& p : r.parents) alive = alive && cells.count(p) != 0;
                if (!alive) continue;
                changed |= apply_one(ab, r);
                if (bot) return;
            }
            if (!changed) break;
        }
    }

    bool refine_cell(const cell_key& c, const abs_value& nv) {
        abs_value m = cells[c].meet(nv);
        if (m.is_bottom()) {
            bot = true;
            return true;
        }
        bool changed = !(cells[c].leq(m) && m.leq(cells[c]));
        cells[c] = m;
        return changed;
    }

    bool apply_one(const abi& ab, const relation& r) {
        bool changed = false;
        switch (r.k) {
        case relation::kind::extract: {
            const cell_key& par = r.parents[0];
            uint32_t s = ab.sizeof_(r.derived.t);
            uint32_t delta = r.pos[0];
            changed |= refine_cell(r.derived, extract_value(ab, cells[par], delta, s, r.derived.t));
            if (bot) return changed;
            // backward: the parent's bytes at [delta, delta+s) must show the
            // derived value
            numeric_value dv = cells[r.derived].num;
            if (is_signed_int(r.derived.t)) dv = dv.wrap_to(ab, toggle_sign(r.derived.t));
            uint32_t ps = ab.sizeof_(par.t);
            if (delta + s == ps && dv.iv.lo >= 0) {
                // top bytes: parent in [dv.lo*256^delta, (dv.hi+1)*256^delta - 1]
                i128 unit = ipow256(delta);
                i128 lo = is_finite(dv.iv.lo) ? dv.iv.lo * unit : kNegInf;
                i128 hi = is_finite(dv.iv.hi) ? (dv.iv.hi + 1) * unit - 1 : kPosInf;
                changed |= refine_cell(par, abs_value::of_int(par.t,
                               numeric_value::of(interval::range(lo, hi), congruence::top())));
            } else if (delta == 0 && dv.is_single() && dv.single_value() >= 0) {
                // low bytes: parent congruent to the value mod 256^s
                congruence cg = congruence::of(ipow256(s), dv.single_value());
                changed |= refine_cell(par, abs_value::of_int(par.t,
                               numeric_value::of(interval::top(), cg)));
            }
            return changed;
        }
        case relation::kind::compose: {
            numeric_value sum = numeric_value::single(0);
            for (size_t i = 0; i < r.parents.size(); ++i)
                sum = sum.add(cells[r.parents[i]].num.mul(numeric_value::single(ipow256(r.pos[i]))));
            changed |= refine_cell(r.derived,
                                   abs_value::of_int(r.derived.t,
                                                     sum.meet(numeric_value::of_type(ab, r.derived.t))));
            if (bot) return changed;
            for (size_t i = 0; i < r.parents.size(); ++i) {
                uint32_t ps = ab.sizeof_(r.parents[i].t);
                changed |= refine_cell(r.parents[i],
                                       extract_value(ab, cells[r.derived], r.pos[i], ps,
                                                     r.parents[i].t));
                if (bot) return changed;
            }
            return changed;
        }
        case relation::kind::sign_link: {
            const cell_key& par = r.parents[0];
            changed |= refine_cell(r.derived, abs_value::of_int(r.derived.t,
                                       cells[par].num.wrap_to(ab, r.derived.t)));
            if (bot) return changed;
            changed |= refine_cell(par, abs_value::of_int(par.t,
                                       cells[r.derived].num.wrap_to(ab, par.t)));
            return changed;
        }
        case relation::kind::null_link: {
            // derived is the pointer cell, parents[0] the integer view
            const cell_key& ic = r.parents[0];
            const cell_key& pc = r.derived;
            if (!cells.count(ic) || !cells.count(pc)) return changed;
            const abs_value& iv = cells[ic];
            const abs_value& pv = cells[pc];
            if (iv.num.is_single() && iv.num.single_value() == 0)
                changed |= refine_cell(pc, abs_value::of_ptr(base_set::single(base_ref::null()),
                                                             numeric_value::top()));
            else if (!iv.num.contains(0) && pv.bases.contains(base_ref::null())) {
                abs_value np = pv;
                np.bases = np.bases.top ? np.bases : np.bases.erase(base_ref::null());
                if (!np.bases.top) changed |= refine_cell(pc, np);
            }
            if (bot) return changed;
            const abs_value& pv2 = cells[pc];
            if (pv2.bases.only(base_ref::null()))
                changed |= refine_cell(ic, abs_value::of_int(ic.t, numeric_value::single(0)));
            else if (!pv2.bases.contains(base_ref::null()) && is_unsigned_int(ic.t))
                changed |= refine_cell(
                    ic, abs_value::of_int(ic.t, numeric_value::range(1, ab.type_max(ic.t))));
            return changed;
        }
        }
        return changed;
    }

    // ---- equality reduction ----

    // Propagates a binding of V into the counterpart cells of its
    // destination: every cell fully inside the source zone meets its mirror.
    void eq_reduce(const cfg& g, const abi& ab, var_id V) {
        auto it = eq.b.find(V);
        if (it == eq.b.end()) return;
        eq_binding e = it->second;
        std::vector<std::pair<cell_key, abs_value>> sources;
        for (auto& [k, val] : cells) {
            if (k.v != V) continue;
            uint32_t s = ab.sizeof_(k.t);
            if (k.off >= e.s && k.off + s <= e.s + e.l)
                sources.push_back({k, val});
        }
        for (auto& [k, val] : sources) {
            cell_key dst{e.w, uint32_t(int64_t(k.off) + e.shift()), k.t};
            realize(g, ab, dst);
            refine_cell(dst, val);
            if (bot) return;
        }
        // and the zone constrains the source from the destination likewise
        std::vector<std::pair<cell_key, abs_value>> dests;
        for (auto& [k, val] : cells) {
            if (k.v != e.w) continue;
            uint32_t s = ab.sizeof_(k.t);
            if (k.off >= e.d && k.off + s <= e.d + e.l)
                dests.push_back({k, val});
        }
        for (auto& [k, val] : dests) {
            cell_key src{V, uint32_t(int64_t(k.off) - e.shift()), k.t};
            realize(g, ab, src);
            refine_cell(src, val);
            if (bot) return;
        }
    }

    void eq_sync(const cfg& g, const abi& ab) {
        std::vector<var_id> keys;
        for (auto& [v, e] : eq.b) keys.push_back(v);
        for (var_id v : keys) {
            eq_reduce(g, ab, v);
            if (bot) return;
        }
    }

    // ---- ordering, join, widening ----

    // realize on each side every cell the other side has (per-side patterns
    // reproduce the static-zero additions), then compare/combine pointwise
    static void unify(const cfg& g, const abi& ab, memory_state& a, memory_state& b) {
        if (a.bot || b.bot) return;
        for (int round = 0; round < 4; ++round) {
            std::vector<cell_key> missing_a, missing_b;
            for (auto& [k, v] : a.cells)
                if (!b.cells.count(k)) missing_b.push_back(k);
            for (auto& [k, v] : b.cells)
                if (!a.cells.count(k)) missing_a.push_back(k);
            if (missing_a.empty() && missing_b.empty()) return;
            for (auto& k : missing_a) a.realize(g, ab, k);
            for (auto& k : missing_b) b.realize(g, ab, k);
        }
        // key sets may still differ after the intermediate-cell bound; force
        // exact agreement so pointwise ops line up
        for (auto& [k, v] : a.cells)
            if (!b.cells.count(k)) b.cells[k] = abs_value::top_of(ab, k.t);
        for (auto& [k, v] : b.cells)
            if (!a.cells.count(k)) a.cells[k] = abs_value::top_of(ab, k.t);
    }

    bool leq_m(const cfg& g, const abi& ab, const memory_state& o) const {
        if (bot) return true;
        if (o.bot) return false;
        memory_state a = *this, b = o;
        unify(g, ab, a, b);
        for (auto& [k, bv] : b.cells) {
            auto it = a.cells.find(k);
            if (it == a.cells.end() || !it->second.leq(bv)) return false;
        }
        // may-written grows upward, must-initialized shrinks upward
        for (auto& [v, w] : a.written)
            if (!b.written_of(v).superset_of(w)) return false;
        for (auto& [v, w] : b.must_init)
            if (!a.must_init_of(v).superset_of(w)) return false;
        return a.eq.leq(b.eq);
    }

    memory_state join_m(const cfg& g, const abi& ab, const memory_state& o) const {
        if (bot) return o;
        if (o.bot) return *this;
        memory_state a = *this, b = o;
        unify(g, ab, a, b);
        return combine(a, b, [&](const abs_value& x, const abs_value& y) { return x.join(y); });
    }

    memory_state widen_m(const cfg& g, const abi& ab, const memory_state& o, uint32_t step,
                         uint32_t cong_delay) const {
        if (bot) return o;
        if (o.bot) return *this;
        memory_state a = *this, b = o;
        unify(g, ab, a, b);
        return combine(a, b, [&](const abs_value& x, const abs_value& y) {
            return x.widen(y, step, cong_delay);
        });
    }

    template <class F>
    static memory_state combine(const memory_state& a, const memory_state& b, F merge) {
        memory_state r;
        for (auto& [k, av] : a.cells) {
            auto it = b.cells.find(k);
            if (it != b.cells.end()) r.cells[k] = merge(av, it->second);
        }
        for (auto& [v, w] : a.written) r.written[v] = w;
        for (auto& [v, w] : b.written)
            for (auto& [lo, hi] : w.r) r.written[v].add(lo, hi);
        for (auto& [v, w] : a.must_init) {
            auto it = b.must_init.find(v);
            if (it == b.must_init.end()) continue;
            byte_ranges m = w.meet(it->second);
            if (!m.empty()) r.must_init[v] = m;
        }
        for (auto& rel : a.rels) {
            bool both = std::find(b.rels.begin(), b.rels.end(), rel) != b.rels.end();
            bool alive = r.cells.count(rel.derived) != 0;
            for (auto& p : rel.parents) alive = alive && r.cells.count(p) != 0;
            if (both && alive) r.rels.push_back(rel);
        }
        r.eq = a.eq.lub(b.eq);
        return r;
    }

    bool equal_to(const cfg& g, const abi& ab, const memory_state& o) const {
        return leq_m(g, ab, o) && o.leq_m(g, ab, *this);
    }

    // ---- concrete membership ----

    // Every cell's recomposed concrete value must lie in its abstraction,
    // asserted bindings must hold byte-for-byte, and must-written bytes must
    // actually be initialized.
    bool gamma_member(const cfg& g, const abi& ab,
                      const std::map<var_id, std::vector<cbyte>>& store, uint64_t seed,
                      std::string* why = nullptr) const {
        if (bot) {
            if (why) *why = "state is bottom but the point was reached";
            return false;
        }
        for (auto& [k, val] : cells) {
            auto it = store.find(k.v);
            if (it == store.end()) {
                if (why) *why = "cell over dead variable " + g.vars[k.v].name;
                return false;
            }
            uint32_t s = ab.sizeof_(k.t);
            if (k.off + s > it->second.size()) {
                if (why) *why = "cell out of bounds of " + g.vars[k.v].name;
                return false;
            }
            std::vector<cbyte> win(it->second.begin() + k.off, it->second.begin() + k.off + s);
            recompose_result rr = recompose(ab, win.data(), k.t);
            if (rr.nondet) {
                for (auto& bb : win)
                    if (bb.k == cbyte::kind::piece)
                        bb = cbyte::raw(piece_byte(seed, bb.pb, bb.po, bb.idx));
                rr = recompose(ab, win.data(), k.t);
            }
            if (!val.contains(rr.v)) {
                if (why) {
                    std::ostringstream os;
                    os << "cell (" << g.vars[k.v].name << "," << k.off << "," << scalar_name(k.t)
                       << ") excludes the concrete value";
                    *why = os.str();
                }
                return false;
            }
        }
        for (auto& [v, w] : must_init) {
            auto it = store.find(v);
            if (it == store.end()) continue;
            if (g.vars[v].is_static) continue;
            for (auto& [lo, hi] : w.r)
                for (uint32_t i = lo; i < hi && i < it->second.size(); ++i)
                    if (it->second[i].k == cbyte::kind::uninit) {
                        if (why)
                            *why = "byte " + std::to_string(i) + " of " + g.vars[v].name +
                                   " claimed initialized but holds no written data";
                        return false;
                    }
        }
        if (!eq.gamma_holds(store)) {
            if (why) *why = "an equality binding does not hold byte-for-byte";
            return false;
        }
        return true;
    }

    // ---- dump ----

    std::string dump(const cfg& g, const abi& ab) const {
        (void)ab;
        std::ostringstream os;
        if (bot) {
            os << "bottom\n";
            return os.str();
        }
        for (auto& [k, v] : cells) {
            os << "cell (" << g.vars[k.v].name << "," << k.off << "," << scalar_name(k.t) << ") = ";
            if (v.is_bottom()) {
                os << "bottom";
            } else if (k.t == scalar_type::ptr) {
                os << "{";
                if (v.bases.top) {
                    os << "any";
                } else {
                    bool first = true;
                    for (auto& b : v.bases.bases) {
                        if (!first) os << ",";
                        os << base_str(g, b);
                        first = false;
                    }
                }
                os << "}";
                if (v.has_var_base()) os << " + " << num_str(v.num);
            } else if (is_float(k.t)) {
                os << "[" << v.fl.lo << ", " << v.fl.hi << "]" << (v.fl.nan ? " nan" : "");
            } else {
                os << num_str(v.num);
            }
            os << "\n";
        }
        for (auto& [v, w] : written) {
            os << "written " << g.vars[v].name << ":";
            for (auto& [lo, hi] : w.r) os << " [" << lo << "," << hi << ")";
            os << "\n";
        }
        for (auto& [v, w] : must_init) {
            os << "init " << g.vars[v].name << ":";
            for (auto& [lo, hi] : w.r) os << " [" << lo << "," << hi << ")";
            os << "\n";
        }
        for (auto& r : rels) {
            const char* kn = r.k == relation::kind::extract   ? "extract"
                             : r.k == relation::kind::compose ? "compose"
                             : r.k == relation::kind::sign_link ? "sign"
                                                                : "null-link";
            os << "rel " << kn << " (" << g.vars[r.derived.v].name << "," << r.derived.off << ","
               << scalar_name(r.derived.t) << ") <-";
            for (auto& p : r.parents)
                os << " (" << g.vars[p.v].name << "," << p.off << "," << scalar_name(p.t) << ")";
            os << "\n";
        }
        os << eq.dump(g);
        return os.str();
    }

    static std::string num_str(const numeric_value& n) {
        std::ostringstream os;
        if (n.is_bottom()) {
            os << "bottom";
            return os.str();
        }
        os << "[";
        os << (is_finite(n.iv.lo) ? i128_str(n.iv.lo) : "-inf");
        os << ", ";
        os << (is_finite(n.iv.hi) ? i128_str(n.iv.hi) : "+inf");
        os << "]";
        if (n.cg.m != 1) os << " mod " << i128_str(n.cg.m) << " rem " << i128_str(n.cg.r);
        return os.str();
    }
};

} // namespace cellscope
