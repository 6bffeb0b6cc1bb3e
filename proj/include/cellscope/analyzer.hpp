#pragma once

#include <set>

#include "transfer.hpp"

namespace cellscope {

struct alarm_record {
    point_id point = 0;          // checkpoint: source point of the edge
    sloc loc;                    // statement location: destination point of the edge
    alarm_kind kind = alarm_kind::overflow;
    std::string expr;
    std::string detail;

    auto key() const { return std::tie(point, kind, expr, detail, loc.line, loc.col); }
    bool operator<(const alarm_record& o) const { return key() < o.key(); }
    bool operator==(const alarm_record& o) const { return key() == o.key(); }
};

struct analysis_result {
    std::vector<memory_state> states; // indexed by control point
    std::vector<alarm_record> alarms; // sorted and deduplicated
    uint64_t iterations = 0;
    bool capped = false;      // iteration cap hit: result unsound-incomplete
    bool postfix_ok = true;   // a-posteriori soundness check
};

namespace detail {

inline std::vector<bool> find_back_edges(const cfg& g) {
    std::vector<bool> back(g.edges.size(), false);
    std::vector<uint8_t> color(g.points.size(), 0); // 0 white, 1 on stack, 2 done
    struct frame {
        point_id p;
        size_t next = 0;
    };
    std::vector<frame> stack;
    stack.push_back({g.entry});
    color[g.entry] = 1;
    while (!stack.empty()) {
        frame& f = stack.back();
        if (f.next < g.out_edges[f.p].size()) {
            uint32_t ei = g.out_edges[f.p][f.next++];
            point_id q = g.edges[ei].dst;
            if (color[q] == 1)
                back[ei] = true;
            else if (color[q] == 0) {
                color[q] = 1;
                stack.push_back({q});
            }
        } else {
            color[f.p] = 2;
            stack.pop_back();
        }
    }
    return back;
}

} // namespace detail

// ---- the fixpoint engine ----

class analyzer {
public:
    analyzer(const cfg& g, const abi& ab, const analysis_config& conf)
        : g_(g), ab_(ab), conf_(conf) {}

    analysis_result run() {
        analysis_result res;
        res.states.assign(g_.points.size(), memory_state::bottom());
        res.states[g_.entry] = memory_state{}; // statics zeroed, locals uninitialized
        std::vector<bool> back = detail::find_back_edges(g_);
        std::vector<uint32_t> back_arrivals(g_.points.size(), 0);
        std::vector<uint32_t> widen_steps(g_.points.size(), 0);

        std::set<point_id> work{g_.entry};
        while (!work.empty()) {
            if (res.iterations >= conf_.max_iters) {
                res.capped = true;
                break;
            }
            point_id p = *work.begin();
            work.erase(work.begin());
            for (uint32_t ei : g_.out_edges[p]) {
                const cfg_edge& e = g_.edges[ei];
                ++res.iterations;
                memory_state ns = transfer_edge(res.states[p], e, nullptr);
                if (ns.bot) continue;
                memory_state& old = res.states[e.dst];
                memory_state nxt =
                    old.bot ? std::move(ns) : old.join_m(g_, ab_, ns);
                if (back[ei] && ++back_arrivals[e.dst] > conf_.widen_delay) {
                    nxt = old.widen_m(g_, ab_, nxt, widen_steps[e.dst], conf_.cong_delay);
                    ++widen_steps[e.dst];
                }
                if (old.bot || !nxt.leq_m(g_, ab_, old)) {
                    res.states[e.dst] = std::move(nxt);
                    work.insert(e.dst);
                }
            }
        }

        if (!res.capped) narrow_once(res);
        res.postfix_ok = check_postfixpoint(res);
        collect_alarms(res);
        return res;
    }

    // for every edge p->q: transfer(state_p) must be below state_q
    bool check_postfixpoint(const analysis_result& res) const {
        for (auto& e : g_.edges) {
            memory_state out = transfer_edge(res.states[e.src], e, nullptr);
            if (!out.leq_m(g_, ab_, res.states[e.dst])) return false;
        }
        return true;
    }

private:
    memory_state transfer_edge(const memory_state& in, const cfg_edge& e,
                               std::vector<alarm_record>* alarms) const {
        memory_state ns = in;
        if (ns.bot) return ns;
        auto sink = [&](alarm_kind k, const std::string& d) {
            if (alarms) alarms->push_back({e.src, g_.points[e.dst].loc, k, inst_str(g_, e.in), d});
        };
        mem_transfer tr(g_, ab_, conf_, ns, sink);
        if (!tr.apply(e.in)) return memory_state::bottom();
        uint32_t sctx = g_.points[e.src].ctx, dctx = g_.points[e.dst].ctx;
        if (sctx != dctx) {
            auto src_live = g_.live_vars(e.src), dst_live = g_.live_vars(e.dst);
            for (var_id v : dst_live)
                if (!std::binary_search(src_live.begin(), src_live.end(), v)) ns.create_var(v);
            for (var_id v : src_live)
                if (!std::binary_search(dst_live.begin(), dst_live.end(), v)) ns.delete_var(v);
        }
        return ns;
    }

    // one decreasing Gauss-Seidel pass; reverted if it breaks the post-fixpoint
    void narrow_once(analysis_result& res) const {
        std::vector<std::vector<uint32_t>> in_edges(g_.points.size());
        for (uint32_t i = 0; i < g_.edges.size(); ++i) in_edges[g_.edges[i].dst].push_back(i);
        std::vector<memory_state> backup = res.states;
        for (point_id q = 0; q < point_id(g_.points.size()); ++q) {
            if (q == g_.entry || in_edges[q].empty()) continue;
            memory_state acc = memory_state::bottom();
            for (uint32_t ei : in_edges[q]) {
                memory_state out = transfer_edge(res.states[g_.edges[ei].src], g_.edges[ei], nullptr);
                acc = acc.bot ? std::move(out) : acc.join_m(g_, ab_, out);
            }
            if (acc.leq_m(g_, ab_, res.states[q])) res.states[q] = std::move(acc);
        }
        if (!check_postfixpoint(res)) res.states = std::move(backup);
    }

    void collect_alarms(analysis_result& res) const {
        std::vector<alarm_record> raw;
        for (auto& e : g_.edges) transfer_edge(res.states[e.src], e, &raw);
        std::set<alarm_record> dedup(raw.begin(), raw.end());
        res.alarms.assign(dedup.begin(), dedup.end());
    }

    const cfg& g_;
    const abi& ab_;
    const analysis_config& conf_;
};

} // namespace cellscope
