#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>

#include "executor.hpp"
#include "lower.hpp"
#include "parser.hpp"
#include "report.hpp"

namespace cellscope {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw front_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Owns the layout and the graph together: the type table and the lowered
// expressions point back into both.
class pipeline {
public:
    pipeline(const std::string& src, const std::string& filename, const std::string& abi_text,
             lower_options lopt = {})
        : ab_(abi_text.empty() ? abi::default_abi() : parse_abi(abi_text)), types_(ab_) {
        ast_program prog = parse_program(src, filename, types_);
        lowerer lw(prog, types_, lopt);
        g_ = lw.lower();
    }

    pipeline(const pipeline&) = delete;
    pipeline& operator=(const pipeline&) = delete;

    const abi& ab() const { return ab_; }
    const cfg& graph() const { return g_; }

    // name -> range becomes id -> range for every volatile with that name
    std::map<var_id, std::pair<i128, i128>> volatile_ranges(
        const std::map<std::string, std::pair<i128, i128>>& by_name) const {
        std::map<var_id, std::pair<i128, i128>> out;
        for (auto& [name, r] : by_name) {
            bool found = false;
            for (auto& v : g_.vars)
                if (v.name == name && v.is_volatile) {
                    out[v.id] = r;
                    found = true;
                }
            if (!found) throw front_error("no volatile variable named " + name);
        }
        return out;
    }

private:
    abi ab_;
    type_table types_;
    cfg g_;
};

// ---- differential harness ----

struct diff_failure {
    uint64_t seed = 0;
    point_id point = 0;
    std::string what;
};

struct diff_result {
    uint32_t seeds_run = 0;
    uint64_t points_checked = 0;
    std::vector<diff_failure> gamma_failures;
    std::vector<diff_failure> uncovered;

    bool ok() const { return gamma_failures.empty() && uncovered.empty(); }
};

// Replays seeded concrete runs against a finished analysis: every visited
// state must be inside the abstraction there, and every concrete error
// event must have an alarm of the same kind at the same point.
inline diff_result run_diff(const cfg& g, const abi& ab, const analysis_result& res,
                            const std::map<var_id, std::pair<i128, i128>>& inputs,
                            uint32_t seeds, uint64_t max_steps, size_t max_failures = 64) {
    diff_result dr;
    std::set<std::pair<point_id, alarm_kind>> alarm_at;
    for (auto& a : res.alarms) alarm_at.insert({a.point, a.kind});

    for (uint32_t s = 1; s <= seeds; ++s) {
        if (dr.gamma_failures.size() >= max_failures && dr.uncovered.size() >= max_failures)
            break;
        run_config rc{s, max_steps, inputs};
        executor ex(g, ab, rc);
        ++dr.seeds_run;
        auto check = [&]() {
            ++dr.points_checked;
            const memory_state& st = res.states[ex.at()];
            std::string why;
            if (st.bot)
                dr.gamma_failures.push_back({s, ex.at(), "point reached but state is bottom"});
            else if (!st.gamma_member(g, ab, ex.memory().store, ex.seed(), &why))
                dr.gamma_failures.push_back({s, ex.at(), why});
        };
        check();
        while (ex.step()) check();
        for (const event& e : ex.events())
            if (!alarm_at.count({e.at, e.kind}))
                dr.uncovered.push_back(
                    {s, e.at, std::string(alarm_name(e.kind)) + ": " + e.detail});
    }
    return dr;
}

// ---- corpus regression ----

// canonical alarm text compared against the .expect file; point ids are
// deliberately absent so lowering changes do not churn every expectation
inline std::string expect_text(const cfg& g, const analysis_result& res) {
    std::ostringstream os;
    std::vector<report_row> rows = report_rows(g, res);
    os << "alarms " << rows.size() << "\n";
    for (auto& r : rows)
        os << r.line << ":" << r.col << ": " << alarm_name(r.kind) << ": " << r.message
           << " [" << r.expr << "]\n";
    if (res.capped) os << "capped\n";
    if (!res.postfix_ok) os << "postfix-failed\n";
    return os.str();
}

struct corpus_entry {
    std::string path;
    bool passed = false;
    bool want_missing = false; // no .expect file next to the source
    std::string got;
    std::string want;
    std::string error; // parse or analysis failure text
};

inline std::vector<corpus_entry> run_corpus(const std::string& dir, const std::string& abi_text,
                                            const analysis_config& base_conf) {
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    for (auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".c") files.push_back(e.path());
    std::sort(files.begin(), files.end());

    std::vector<corpus_entry> out;
    for (auto& f : files) {
        corpus_entry ce;
        ce.path = f.string();
        fs::path ex = f;
        ex.replace_extension(".expect");
        try {
            if (fs::exists(ex))
                ce.want = read_file(ex.string());
            else
                ce.want_missing = true;
            pipeline pl(read_file(f.string()), f.filename().string(), abi_text,
                        {base_conf.unroll});
            analyzer an(pl.graph(), pl.ab(), base_conf);
            analysis_result res = an.run();
            ce.got = expect_text(pl.graph(), res);
            ce.passed = !ce.want_missing && ce.got == ce.want;
        } catch (const front_error& err) {
            ce.error = err.what();
        }
        out.push_back(std::move(ce));
    }
    return out;
}

} // namespace cellscope
