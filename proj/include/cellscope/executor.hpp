#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "values.hpp"

namespace cellscope {

struct event {
    point_id at = 0;
    alarm_kind kind{};
    std::string detail;
};

struct run_config {
    uint64_t seed = 1;
    uint64_t max_steps = 1u << 20;
    std::map<var_id, std::pair<i128, i128>> inputs; // volatile draw ranges
};

// Concrete memory: byte storage per live variable. Every byte value is
// determined (garbage included), so a state is exactly its bytes.
struct cmem {
    std::map<var_id, std::vector<cbyte>> store;

    bool live(var_id v) const { return store.count(v) != 0; }
};

class executor {
public:
    executor(const cfg& g, const abi& a, run_config cfg)
        : g_(g), abi_(a), cfg_(cfg), rng_(cfg.seed ? cfg.seed : 0x9e3779b97f4a7c15ull) {
        for (auto& v : g_.vars)
            if (v.ctx == 0) create_var(v.id);
        at_ = g_.entry;
    }

    point_id at() const { return at_; }
    const cmem& memory() const { return mem_; }
    uint64_t seed() const { return cfg_.seed; }
    const std::vector<event>& events() const { return events_; }
    bool halted() const { return halted_; }
    bool aborted() const { return aborted_; }
    uint64_t steps() const { return steps_; }

    void set_trace(std::ostream* os) { trace_ = os; }

    // Traverses one edge. Returns false when the run is over (exit reached,
    // trace halted on an error, or the step budget ran out).
    bool step() {
        if (halted_ || aborted_) return false;
        if (at_ == g_.exit && g_.out_edges[at_].empty()) return false;
        if (steps_ >= cfg_.max_steps) {
            aborted_ = true;
            return false;
        }
        const auto& outs = g_.out_edges[at_];
        if (outs.empty()) return false;
        for (uint32_t ei : outs) {
            const cfg_edge& e = g_.edges[ei];
            if (e.in.k == inst::kind::guard) {
                auto c = eval(e.in.cond);
                if (halted_) return false;
                if (!scalar_truth(c)) {
                    trace_edge(e);
                    take(e);
                    return !halted_;
                }
            } else {
                exec(e);
                if (halted_) return false;
                trace_edge(e);
                take(e);
                return !halted_;
            }
        }
        // no guard admitted the state and nothing faulted: structurally this
        // does not happen for lowered programs
        aborted_ = true;
        return false;
    }

    int exit_code() const {
        if (aborted_) return 4;
        return events_.empty() ? 0 : 3;
    }

private:
    // ---- rng ----

    uint64_t next_u64() {
        uint64_t z = (rng_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    i128 draw_range(i128 lo, i128 hi) {
        u128 span = u128(hi - lo) + 1;
        if (span == 0) return lo + i128(next_u64()); // full 2^128: never for our types
        u128 r = (u128(next_u64()) << 64) | next_u64();
        return lo + i128(r % span);
    }

    // ---- events ----

    void record(alarm_kind k, std::string detail, bool halt) {
        events_.push_back({at_, k, std::move(detail)});
        if (halt) halted_ = true;
        if (trace_ && halt) *trace_ << "  ! " << alarm_name(k) << ": " << events_.back().detail << "\n";
    }

    // ---- storage ----

    void create_var(var_id v) {
        const variable& info = g_.vars[v];
        auto& bytes = mem_.store[v];
        bytes.resize(info.size);
        for (auto& b : bytes)
            b = info.is_static ? cbyte::raw(0) : cbyte::uninit(uint8_t(next_u64()));
    }

    void delete_var(var_id v) {
        mem_.store.erase(v);
        // stored pointers into the dead frame become junk
        for (auto& [w, bytes] : mem_.store) {
            for (auto& b : bytes) {
                if (b.k == cbyte::kind::piece && b.pb.k == base_ref::kind::var && b.pb.id == v) {
                    b.pb = base_ref::omega();
                    b.po = 0;
                }
            }
        }
    }

    void take(const cfg_edge& e) {
        uint32_t sctx = g_.points[e.src].ctx, dctx = g_.points[e.dst].ctx;
        if (sctx != dctx) {
            auto src_live = g_.live_vars(e.src), dst_live = g_.live_vars(e.dst);
            for (var_id v : dst_live)
                if (!std::binary_search(src_live.begin(), src_live.end(), v)) create_var(v);
            for (var_id v : src_live)
                if (!std::binary_search(dst_live.begin(), dst_live.end(), v)) delete_var(v);
        }
        at_ = e.dst;
        ++steps_;
    }

    // ---- access resolution ----

    struct access {
        var_id var = kNoVar;
        uint32_t off = 0;
        bool ok = false;
    };

    access resolve(const scalar_value& p, uint32_t nbytes, uint32_t align, const char* what) {
        access r;
        if (p.t != scalar_type::ptr) {
            record(alarm_kind::invalid_pointer, std::string(what) + " through non-pointer", true);
            return r;
        }
        switch (p.pb.k) {
        case base_ref::kind::null: record(alarm_kind::null_deref, std::string(what) + " through null", true); return r;
        case base_ref::kind::omega:
            record(alarm_kind::invalid_pointer, std::string(what) + " through invalid pointer", true);
            return r;
        case base_ref::kind::func:
            record(alarm_kind::out_of_bounds, std::string(what) + " on a function", true);
            return r;
        case base_ref::kind::var: break;
        }
        var_id v = var_id(p.pb.id);
        const variable& info = g_.vars[v];
        if (!mem_.live(v)) {
            record(alarm_kind::invalid_pointer, std::string(what) + " into a dead frame", true);
            return r;
        }
        if (p.po < 0 || p.po + nbytes > info.size) {
            record(alarm_kind::out_of_bounds,
                   std::string(what) + " at " + info.name + "+" + i128_str(p.po) + " size " +
                       std::to_string(nbytes),
                   true);
            return r;
        }
        if (align > 1 && floor_mod(p.po, align) != 0) {
            record(alarm_kind::misaligned,
                   std::string(what) + " at " + info.name + "+" + i128_str(p.po), true);
            return r;
        }
        r.var = v;
        r.off = uint32_t(p.po);
        r.ok = true;
        return r;
    }

    scalar_value read_mem(const access& a, scalar_type t) {
        uint32_t n = abi_.sizeof_(t);
        const auto& bytes = mem_.store[a.var];
        recompose_result rr = recompose(abi_, bytes.data() + a.off, t);
        if (rr.uninit && !g_.vars[a.var].is_static)
            record(alarm_kind::uninit_read,
                   "read of uninitialized bytes of " + g_.vars[a.var].name, false);
        if (!rr.nondet) return rr.v;
        // pointer pieces seen at a numeric type read their fixed encoding
        std::vector<cbyte> tmp(bytes.begin() + a.off, bytes.begin() + a.off + n);
        for (auto& b : tmp)
            if (b.k == cbyte::kind::piece)
                b = cbyte::raw(piece_byte(cfg_.seed, b.pb, b.po, b.idx));
        return recompose(abi_, tmp.data(), t).v;
    }

    void write_mem(const access& a, const scalar_value& v) {
        uint32_t n = abi_.sizeof_(v.t);
        auto& bytes = mem_.store[a.var];
        encode_scalar(abi_, v, bytes.data() + a.off);
        note_write(a.var, a.off, n);
    }

    // ---- expression evaluation ----

    scalar_value eval(lexpr_ref e) {
        switch (e->k) {
        case lexpr::kind::num: return scalar_value::of_int(scalar_type::sllong, e->ival);
        case lexpr::kind::fnum: return scalar_value::of_float(scalar_type::dbl, e->fval);
        case lexpr::kind::addr: return scalar_value::of_ptr(e->base, 0);
        case lexpr::kind::input: {
            const variable& info = g_.vars[e->vol_var];
            scalar_type t = info.type->as_scalar();
            auto it = cfg_.inputs.find(e->vol_var);
            i128 lo = it != cfg_.inputs.end() ? it->second.first : abi_.type_min(t);
            i128 hi = it != cfg_.inputs.end() ? it->second.second : abi_.type_max(t);
            i128 d = draw_range(lo, hi);
            if (is_float(t)) return scalar_value::of_float(t, double(int64_t(d)));
            return scalar_value::of_int(t, d);
        }
        case lexpr::kind::deref: {
            scalar_value p = eval(e->a);
            if (halted_) return p;
            access a = resolve(p, abi_.sizeof_(e->tau), abi_.alignof_(e->tau), "read");
            if (!a.ok) return scalar_value::of_int(e->tau, 0);
            return read_mem(a, e->tau);
        }
        case lexpr::kind::cast: {
            scalar_value v = eval(e->a);
            if (halted_) return v;
            if (e->tau == scalar_type::ptr) {
                if (v.t == scalar_type::ptr) return v;
                return v.i == 0 ? scalar_value::of_ptr(base_ref::null(), 0)
                                : scalar_value::of_ptr(base_ref::omega(), 0);
            }
            op_events ev;
            scalar_value r = convert_scalar(abi_, v, e->tau, ev);
            if (ev.overflow) record(alarm_kind::overflow, "conversion out of range", false);
            return r;
        }
        case lexpr::kind::un: {
            scalar_value v = eval(e->a);
            if (halted_) return v;
            switch (e->op) {
            case lop::lnot: return scalar_value::of_int(scalar_type::sint, scalar_truth(v) ? 0 : 1);
            case lop::neg: {
                if (is_float(e->tau)) return scalar_value::of_float(e->tau, -v.f);
                i128 w = wrap_int(abi_, e->tau, -v.i);
                if (w == v.i && v.i != 0) record(alarm_kind::overflow, "negation wraps", false);
                return scalar_value::of_int(e->tau, w);
            }
            case lop::bnot: return scalar_value::of_int(e->tau, wrap_int(abi_, e->tau, ~v.i));
            default: break;
            }
            return v;
        }
        case lexpr::kind::bin: return eval_bin(e);
        }
        return scalar_value::of_int(scalar_type::sint, 0);
    }

    scalar_value eval_bin(lexpr_ref e) {
        scalar_value x = eval(e->a);
        if (halted_) return x;
        scalar_value y = eval(e->b);
        if (halted_) return y;
        switch (e->op) {
        case lop::eq:
        case lop::ne:
        case lop::lt:
        case lop::le:
        case lop::gt:
        case lop::ge:
            return scalar_value::of_int(scalar_type::sint, eval_compare(e->op, x, y) ? 1 : 0);
        default: break;
        }
        if (e->tau == scalar_type::ptr) {
            // pointer plus byte offset with the one-past-the-end rule
            i128 j = y.i;
            switch (x.pb.k) {
            case base_ref::kind::null:
                record(alarm_kind::invalid_pointer, "arithmetic on null", true);
                return x;
            case base_ref::kind::omega:
                record(alarm_kind::invalid_pointer, "arithmetic on invalid pointer", true);
                return x;
            case base_ref::kind::func:
                record(alarm_kind::invalid_pointer, "arithmetic on function pointer", true);
                return x;
            case base_ref::kind::var: break;
            }
            const variable& info = g_.vars[x.pb.id];
            i128 no = x.po + j;
            if (no < 0 || no > info.size) {
                record(alarm_kind::out_of_bounds,
                       "pointer arithmetic leaves " + info.name + " (offset " + i128_str(no) + ")",
                       true);
                return x;
            }
            return scalar_value::of_ptr(x.pb, no);
        }
        if (x.t == scalar_type::ptr && y.t == scalar_type::ptr && e->op == lop::sub) {
            if (!(x.pb == y.pb)) {
                record(alarm_kind::cross_base, "subtraction of unrelated pointers", true);
                return scalar_value::of_int(e->tau, 0);
            }
            return scalar_value::of_int(e->tau, wrap_int(abi_, e->tau, x.po - y.po));
        }
        if (is_float(e->tau))
            return scalar_value::of_float(e->tau, eval_float_bin(e->op, e->tau, x.f, y.f));
        op_events ev;
        i128 r = eval_int_bin(abi_, e->op, e->tau, x.i, y.i, ev);
        if (ev.div0) {
            record(alarm_kind::div_by_zero, "division by zero", true);
            return scalar_value::of_int(e->tau, 0);
        }
        if (ev.shift_range) record(alarm_kind::shift_range, "shift count out of range", false);
        if (ev.overflow) record(alarm_kind::overflow, "signed arithmetic wraps", false);
        return scalar_value::of_int(e->tau, r);
    }

    // ---- instruction execution ----

    void exec(const cfg_edge& e) {
        mods_.clear();
        switch (e.in.k) {
        case inst::kind::assign: {
            scalar_value v = eval(e.in.src);
            if (halted_) return;
            op_events ev;
            if (e.in.tau == scalar_type::ptr) {
                if (v.t != scalar_type::ptr)
                    v = v.i == 0 ? scalar_value::of_ptr(base_ref::null(), 0)
                                 : scalar_value::of_ptr(base_ref::omega(), 0);
            } else {
                v = convert_scalar(abi_, v, e.in.tau, ev);
            }
            if (ev.overflow) record(alarm_kind::overflow, "conversion out of range", false);
            scalar_value d = eval(e.in.dst);
            if (halted_) return;
            access a = resolve(d, abi_.sizeof_(e.in.tau), abi_.alignof_(e.in.tau), "write");
            if (!a.ok) return;
            write_mem(a, v);
            return;
        }
        case inst::kind::copy: {
            scalar_value s = eval(e.in.src);
            if (halted_) return;
            scalar_value d = eval(e.in.dst);
            if (halted_) return;
            uint32_t align = e.in.scalar_copy ? abi_.alignof_(e.in.tau) : 1;
            access sa = resolve(s, e.in.nbytes, align, "read");
            if (!sa.ok) return;
            access da = resolve(d, e.in.nbytes, align, "write");
            if (!da.ok) return;
            std::vector<cbyte> tmp(mem_.store[sa.var].begin() + sa.off,
                                   mem_.store[sa.var].begin() + sa.off + e.in.nbytes);
            auto& db = mem_.store[da.var];
            for (uint32_t i = 0; i < e.in.nbytes; ++i) db[da.off + i] = tmp[i];
            note_write(da.var, da.off, e.in.nbytes);
            return;
        }
        case inst::kind::guard: return;
        }
    }

    void note_write(var_id v, uint32_t off, uint32_t n) { mods_.push_back({v, off, n}); }

    void trace_edge(const cfg_edge& e) {
        if (!trace_) return;
        *trace_ << "point=" << e.src << " inst=" << inst_str(g_, e.in) << "\n";
        for (auto& m : mods_) {
            const auto& bytes = mem_.store[m.var];
            for (uint32_t i = 0; i < m.n; ++i) {
                const cbyte& b = bytes[m.off + i];
                *trace_ << "  " << g_.vars[m.var].name << "[" << m.off + i << "] = ";
                if (b.k == cbyte::kind::raw) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "0x%02x", b.v);
                    *trace_ << buf;
                } else if (b.k == cbyte::kind::piece) {
                    *trace_ << base_str(g_, b.pb) << "+" << i128_str(b.po) << "#" << int(b.idx);
                } else {
                    *trace_ << "uninit";
                }
                *trace_ << "\n";
            }
        }
        mods_.clear();
    }

    struct mod {
        var_id var;
        uint32_t off;
        uint32_t n;
    };

    const cfg& g_;
    const abi& abi_;
    run_config cfg_;
    uint64_t rng_;
    cmem mem_;
    std::vector<event> events_;
    std::vector<mod> mods_;
    std::ostream* trace_ = nullptr;
    point_id at_ = 0;
    uint64_t steps_ = 0;
    bool halted_ = false;
    bool aborted_ = false;
};

struct run_result {
    int exit_code = 0;
    uint64_t steps = 0;
    bool halted = false;
    bool aborted = false;
    point_id last_point = 0;
    std::vector<event> events;
};

inline run_result run_program(const cfg& g, const abi& a, run_config cfg,
                              std::ostream* trace = nullptr) {
    executor ex(g, a, cfg);
    ex.set_trace(trace);
    while (ex.step()) {
    }
    run_result r;
    r.exit_code = ex.exit_code();
    r.steps = ex.steps();
    r.halted = ex.halted();
    r.aborted = ex.aborted();
    r.last_point = ex.at();
    r.events = ex.events();
    if (trace) *trace << "exit point=" << ex.at() << " code=" << r.exit_code << "\n";
    return r;
}

} // namespace cellscope
