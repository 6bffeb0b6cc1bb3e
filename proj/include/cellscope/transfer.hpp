#pragma once

#include "memstate.hpp"

namespace cellscope {

// Applies lowered instructions to the abstract memory. Dereferences resolve
// to candidate (variable, offset) windows; a unique window updates strongly,
// several update weakly, and past the fan-out bound the state degrades to a
// sound havoc.
class mem_transfer {
public:
    mem_transfer(const cfg& g, const abi& ab, const analysis_config& conf, memory_state& st,
                 std::function<void(alarm_kind, const std::string&)> alarm)
        : g_(g), ab_(ab), conf_(conf), st_(st), sink_(std::move(alarm)), ae_(hooks()) {}

    // false when the state became bottom: the edge is infeasible
    bool apply(const inst& in) {
        if (st_.bot) return false;
        switch (in.k) {
        case inst::kind::assign: do_assign(in); break;
        case inst::kind::copy: do_copy(in); break;
        case inst::kind::guard: do_guard(in); break;
        }
        return !st_.bot;
    }

    // forward evaluation without side effects on control flow (for tests)
    abs_value eval(lexpr_ref e) { return ae_.forward(e).v; }

private:
    struct access_set {
        std::vector<std::pair<var_id, uint32_t>> locs;
        bool degrade = false;
    };

    void raise(alarm_kind k, const std::string& d) {
        if (!quiet_) sink_(k, d);
    }

    aeval_hooks hooks() {
        aeval_hooks h;
        h.g = &g_;
        h.ab = &ab_;
        h.load = [this](const abs_value& p, scalar_type t) { return load(p, t); };
        h.refine = [this](const abs_value& p, scalar_type t, const abs_value& v) {
            refine(p, t, v);
        };
        h.prune_addr = [this](const abs_value& p, scalar_type t) { return prune(p, t); };
        h.input = [this](var_id v) { return input(v); };
        h.alarm = [this](alarm_kind k, const std::string& d) { raise(k, d); };
        h.base_size = [this](base_ref b) {
            return b.k == base_ref::kind::var ? g_.vars[b.id].size : 0u;
        };
        return h;
    }

    // ---- dereference resolution ----

    access_set resolve(const abs_value& p, uint32_t bytes, uint32_t align, bool is_read) {
        access_set out;
        if (p.is_bottom()) return out;
        if (p.t != scalar_type::ptr) {
            raise(alarm_kind::invalid_pointer, "access through a non-pointer value");
            return out;
        }
        if (p.bases.top) {
            // anything could fault or be read uninitialized here
            raise(alarm_kind::invalid_pointer, "access through an unknown pointer");
            raise(alarm_kind::null_deref, "access through an unknown pointer");
            raise(alarm_kind::out_of_bounds, "access through an unknown pointer");
            if (align > 1) raise(alarm_kind::misaligned, "access through an unknown pointer");
            if (is_read) raise(alarm_kind::uninit_read, "access through an unknown pointer");
            out.degrade = true;
            return out;
        }
        for (auto& b : p.bases.bases) {
            switch (b.k) {
            case base_ref::kind::null:
                raise(alarm_kind::null_deref, "access through null");
                break;
            case base_ref::kind::omega:
                raise(alarm_kind::invalid_pointer, "access through invalid pointer");
                break;
            case base_ref::kind::func:
                raise(alarm_kind::out_of_bounds, "access on a function");
                break;
            case base_ref::kind::var: {
                const variable& vi = g_.vars[b.id];
                if (bytes > vi.size) {
                    raise(alarm_kind::out_of_bounds, "access may leave its object");
                    break;
                }
                i128 wlo = 0, whi = i128(vi.size) - bytes;
                numeric_value in = p.num.meet(numeric_value::range(wlo, whi));
                if (!p.num.iv.leq(interval::range(wlo, whi)))
                    raise(alarm_kind::out_of_bounds, "access may leave its object");
                if (in.is_bottom()) break;
                numeric_value al = in;
                if (align > 1) {
                    al = in.meet(numeric_value::of(interval::top(), congruence::of(align, 0)));
                    if (!in.leq(al)) raise(alarm_kind::misaligned, "access may be misaligned");
                    if (al.is_bottom()) break;
                }
                i128 step = al.cg.m == 0 ? whi - al.iv.lo + 1 : al.cg.m;
                if (step <= 0) step = 1;
                for (i128 o = al.iv.lo; o <= al.iv.hi; o += step) {
                    out.locs.push_back({b.id, uint32_t(o)});
                    if (out.locs.size() > conf_.fanout) {
                        raise(alarm_kind::invalid_pointer, "too many candidate locations");
                        if (is_read) raise(alarm_kind::uninit_read, "too many candidate locations");
                        out.degrade = true;
                        out.locs.clear();
                        return out;
                    }
                }
                break;
            }
            }
        }
        return out;
    }

    // survivors of an access: var bases with a nonempty valid offset window
    abs_value prune(const abs_value& p, scalar_type t) {
        uint32_t bytes = ab_.sizeof_(t), align = ab_.alignof_(t);
        if (p.is_bottom() || p.t != scalar_type::ptr) return abs_value::bottom_of(scalar_type::ptr);
        if (p.bases.top) return p;
        base_set sv;
        i128 max_hi = -1;
        for (auto& b : p.bases.bases) {
            if (b.k != base_ref::kind::var) continue;
            const variable& vi = g_.vars[b.id];
            if (bytes > vi.size) continue;
            i128 whi = i128(vi.size) - bytes;
            numeric_value in = p.num.meet(numeric_value::range(0, whi));
            if (align > 1)
                in = in.meet(numeric_value::of(interval::top(), congruence::of(align, 0)));
            if (in.is_bottom()) continue;
            sv.bases.insert(b);
            max_hi = std::max(max_hi, whi);
        }
        if (sv.is_bottom()) return abs_value::bottom_of(scalar_type::ptr);
        numeric_value off = p.num.meet(numeric_value::range(0, max_hi));
        if (align > 1)
            off = off.meet(numeric_value::of(interval::top(), congruence::of(align, 0)));
        return abs_value::of_ptr(sv, off);
    }

    abs_value load(const abs_value& p, scalar_type t) {
        uint32_t bytes = ab_.sizeof_(t);
        access_set acc = resolve(p, bytes, ab_.alignof_(t), true);
        if (acc.degrade) return abs_value::top_of(ab_, t);
        if (acc.locs.empty()) return abs_value::bottom_of(t);
        abs_value r = abs_value::bottom_of(t);
        for (auto& [v, off] : acc.locs) {
            cell_key k{v, off, t};
            st_.realize(g_, ab_, k);
            if (!g_.vars[v].is_static && !st_.must_init_of(v).covers(off, off + bytes))
                raise(alarm_kind::uninit_read, "read of possibly uninitialized bytes");
            r = r.join(st_.cells[k]);
        }
        return r;
    }

    void refine(const abs_value& p, scalar_type t, const abs_value& v) {
        bool saved = quiet_;
        quiet_ = true;
        access_set acc = resolve(p, ab_.sizeof_(t), ab_.alignof_(t), true);
        quiet_ = saved;
        // only a unique location is known to hold the refined value
        if (acc.degrade || acc.locs.size() != 1) return;
        cell_key k{acc.locs[0].first, acc.locs[0].second, t};
        st_.realize(g_, ab_, k);
        st_.refine_cell(k, v);
    }

    abs_value input(var_id v) {
        scalar_type t = g_.vars[v].type->as_scalar();
        auto it = conf_.inputs.find(v);
        i128 lo = it != conf_.inputs.end() ? it->second.first : ab_.type_min(t);
        i128 hi = it != conf_.inputs.end() ? it->second.second : ab_.type_max(t);
        if (is_float(t)) {
            finterval f;
            f.nan = false;
            f.lo = double(int64_t(lo));
            f.hi = double(int64_t(hi));
            return abs_value::of_float(t, f);
        }
        return abs_value::of_int(t, numeric_value::range(lo, hi));
    }

    // ---- stores ----

    void store(const abs_value& p, scalar_type t, const abs_value& val) {
        uint32_t bytes = ab_.sizeof_(t);
        access_set acc = resolve(p, bytes, ab_.alignof_(t), false);
        if (acc.degrade) {
            st_.havoc_all(g_);
            return;
        }
        if (acc.locs.empty()) {
            st_.bot = true;
            return;
        }
        if (acc.locs.size() == 1) {
            auto [v, off] = acc.locs[0];
            cell_key k{v, off, t};
            remove_overlapping(v, off, off + bytes, &k);
            st_.drop_relations_touching(k);
            st_.cells[k] = val;
            st_.written[v].add(off, off + bytes);
            st_.must_init[v].add(off, off + bytes);
            st_.eq.clear_write(v, off, bytes);
            return;
        }
        std::vector<cell_key> keys;
        for (auto& [v, off] : acc.locs) {
            cell_key k{v, off, t};
            st_.realize(g_, ab_, k); // the old value joins into a weak update
            keys.push_back(k);
        }
        for (auto& [v, off] : acc.locs)
            remove_overlapping_except(v, off, off + bytes, keys);
        for (auto& k : keys) {
            st_.drop_relations_touching(k);
            st_.cells[k] = st_.cells[k].join(val);
            st_.written[k.v].add(k.off, k.off + bytes);
            st_.eq.clear_write(k.v, k.off, bytes);
        }
    }

    void remove_overlapping(var_id v, uint32_t lo, uint32_t hi, const cell_key* keep) {
        if (conf_.disable_overlap_removal) return;
        std::vector<cell_key> doomed;
        for (auto& [k, val] : st_.cells) {
            if (k.v != v) continue;
            uint32_t ks = ab_.sizeof_(k.t);
            if (k.off < hi && lo < k.off + ks && !(keep && k == *keep)) doomed.push_back(k);
        }
        for (auto& k : doomed) st_.remove_cell(k);
    }

    void remove_overlapping_except(var_id v, uint32_t lo, uint32_t hi,
                                   const std::vector<cell_key>& keep) {
        if (conf_.disable_overlap_removal) return;
        std::vector<cell_key> doomed;
        for (auto& [k, val] : st_.cells) {
            if (k.v != v) continue;
            uint32_t ks = ab_.sizeof_(k.t);
            if (k.off < hi && lo < k.off + ks &&
                std::find(keep.begin(), keep.end(), k) == keep.end())
                doomed.push_back(k);
        }
        for (auto& k : doomed) st_.remove_cell(k);
    }

    // ---- instructions ----

    void do_assign(const inst& in) {
        anode src = ae_.forward(in.src);
        if (st_.bot) return;
        abs_value v = src.v;
        if (v.is_bottom()) {
            st_.bot = true;
            return;
        }
        if (v.t != in.tau) v = ae_.convert(v, in.tau);
        anode dst = ae_.forward(in.dst);
        if (st_.bot) return;
        if (dst.v.is_bottom()) {
            st_.bot = true;
            return;
        }
        store(dst.v, in.tau, v);
    }

    void do_copy(const inst& in) {
        anode src = ae_.forward(in.src);
        if (st_.bot) return;
        anode dst = ae_.forward(in.dst);
        if (st_.bot) return;
        if (src.v.is_bottom() || dst.v.is_bottom()) {
            st_.bot = true;
            return;
        }
        uint32_t n = in.nbytes;
        uint32_t align = in.scalar_copy ? ab_.alignof_(in.tau) : 1;
        access_set sa = resolve(src.v, n, align, true);
        access_set da = resolve(dst.v, n, align, false);
        if (da.degrade) {
            st_.havoc_all(g_);
            return;
        }
        if (da.locs.empty() || (!sa.degrade && sa.locs.empty())) {
            st_.bot = true;
            return;
        }
        bool exact = !sa.degrade && sa.locs.size() == 1 && da.locs.size() == 1;
        if (!exact) {
            if (in.scalar_copy) {
                copy_as_value(in, sa, da);
                return;
            }
            // unknown raw windows: invalidate every possible destination cell
            for (auto& [v, off] : da.locs) {
                remove_overlapping(v, off, off + n, nullptr);
                st_.written[v].add(off, off + n);
                st_.must_init[v].remove(off, off + n);
                st_.eq.clear_write(v, off, n);
            }
            return;
        }
        auto [vs, so] = sa.locs[0];
        auto [vd, dofs] = da.locs[0];
        // raw byte moves read no values, so an uninitialized source raises
        // nothing here; the moved bytes just stop counting as initialized
        bool src_init = g_.vars[vs].is_static || st_.must_init_of(vs).covers(so, so + n);
        if (in.scalar_copy) st_.realize(g_, ab_, cell_key{vs, so, in.tau});
        // collect mirrors before touching the destination (self-copies)
        std::vector<std::pair<cell_key, abs_value>> mirrors;
        for (auto& [k, val] : st_.cells) {
            if (k.v != vs) continue;
            uint32_t ks = ab_.sizeof_(k.t);
            if (k.off >= so && k.off + ks <= so + n)
                mirrors.push_back({cell_key{vd, k.off - so + dofs, k.t}, val});
        }
        remove_overlapping(vd, dofs, dofs + n, nullptr);
        for (auto& [k, val] : mirrors) {
            st_.drop_relations_touching(k);
            st_.cells[k] = val;
        }
        st_.written[vd].add(dofs, dofs + n);
        if (src_init)
            st_.must_init[vd].add(dofs, dofs + n);
        else
            st_.must_init[vd].remove(dofs, dofs + n);
        st_.eq.transfer_copy(vs, so, vd, dofs, n);
        st_.eq_reduce(g_, ab_, vs);
    }

    // A scalar move between unresolved windows still transfers the joined
    // value, but the moved bytes keep the source's initializedness: the move
    // itself never reads through the value map.
    void copy_as_value(const inst& in, const access_set& sa, const access_set& da) {
        uint32_t n = in.nbytes;
        abs_value v = abs_value::bottom_of(in.tau);
        bool init = !sa.degrade;
        if (sa.degrade) {
            v = abs_value::top_of(ab_, in.tau);
        } else {
            for (auto& [sv, soff] : sa.locs) {
                cell_key k{sv, soff, in.tau};
                st_.realize(g_, ab_, k);
                v = v.join(st_.cells[k]);
                init = init && (g_.vars[sv].is_static ||
                                st_.must_init_of(sv).covers(soff, soff + n));
            }
        }
        if (da.locs.size() == 1) {
            auto [dv, doff] = da.locs[0];
            cell_key k{dv, doff, in.tau};
            remove_overlapping(dv, doff, doff + n, &k);
            st_.drop_relations_touching(k);
            st_.cells[k] = v;
            st_.written[dv].add(doff, doff + n);
            if (init)
                st_.must_init[dv].add(doff, doff + n);
            else
                st_.must_init[dv].remove(doff, doff + n);
            st_.eq.clear_write(dv, doff, n);
            return;
        }
        std::vector<cell_key> keys;
        for (auto& [dv, doff] : da.locs) {
            cell_key k{dv, doff, in.tau};
            st_.realize(g_, ab_, k);
            keys.push_back(k);
        }
        for (auto& [dv, doff] : da.locs)
            remove_overlapping_except(dv, doff, doff + n, keys);
        for (auto& k : keys) {
            st_.drop_relations_touching(k);
            st_.cells[k] = st_.cells[k].join(v);
            st_.written[k.v].add(k.off, k.off + n);
            if (!init) st_.must_init[k.v].remove(k.off, k.off + n);
            st_.eq.clear_write(k.v, k.off, n);
        }
    }

    void do_guard(const inst& in) {
        anode root = ae_.forward(in.cond);
        if (st_.bot) return;
        if (!ae_.test_zero(root)) {
            st_.bot = true;
            return;
        }
        st_.apply_relations(ab_);
        if (st_.bot) return;
        st_.eq_sync(g_, ab_);
    }

    const cfg& g_;
    const abi& ab_;
    const analysis_config& conf_;
    memory_state& st_;
    std::function<void(alarm_kind, const std::string&)> sink_;
    bool quiet_ = false;
    aeval ae_;
};

} // namespace cellscope
