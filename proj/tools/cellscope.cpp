#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "cellscope/driver.hpp"

namespace {

using namespace cellscope;

std::string load_abi_text(const std::string& path) {
    if (!path.empty()) return read_file(path);
    if (const char* env = std::getenv("CELLSCOPE_ABI"))
        if (*env) return read_file(env);
    return {};
}

i128 parse_i128(const std::string& s) {
    if (s.empty()) throw front_error("empty integer");
    if (s[0] == '-') return i128(std::stoll(s));
    return i128(std::stoull(s));
}

std::map<std::string, std::pair<i128, i128>> parse_volatiles(const std::vector<std::string>& vs) {
    std::map<std::string, std::pair<i128, i128>> out;
    for (const std::string& v : vs) {
        size_t eq = v.find('=');
        size_t dd = v.find("..", eq == std::string::npos ? 0 : eq);
        if (eq == std::string::npos || dd == std::string::npos)
            throw front_error("bad volatile range, want VAR=LO..HI: " + v);
        i128 lo = parse_i128(v.substr(eq + 1, dd - eq - 1));
        i128 hi = parse_i128(v.substr(dd + 2));
        if (lo > hi) throw front_error("empty volatile range: " + v);
        out[v.substr(0, eq)] = {lo, hi};
    }
    return out;
}

std::string base_name(const std::string& path) {
    size_t p = path.find_last_of('/');
    return p == std::string::npos ? path : path.substr(p + 1);
}

point_id resolve_point(const cfg& g, int n) {
    if (g.labels.count(n)) return g.label_point(n);
    if (n >= 0 && size_t(n) < g.points.size()) return point_id(n);
    throw front_error("no such point or label: " + std::to_string(n));
}

struct analyze_opts {
    std::string file, abi_path, json_out;
    std::vector<std::string> volatiles;
    std::vector<int> dump_states;
    bool dump_cfg = false;
    bool disable_overlap_removal = false;
    analysis_config conf;
};

int cmd_analyze(const analyze_opts& o) {
    std::string src = read_file(o.file);
    pipeline pl(src, base_name(o.file), load_abi_text(o.abi_path), {o.conf.unroll});
    analysis_config conf = o.conf;
    conf.disable_overlap_removal = o.disable_overlap_removal;
    conf.inputs = pl.volatile_ranges(parse_volatiles(o.volatiles));

    if (o.dump_cfg)
        for (auto& e : pl.graph().edges)
            std::cout << e.src << " -> " << e.dst << " : " << inst_str(pl.graph(), e.in)
                      << "\n";

    auto t0 = std::chrono::steady_clock::now();
    analyzer an(pl.graph(), pl.ab(), conf);
    analysis_result res = an.run();
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - t0)
                  .count();

    print_report(std::cout, pl.graph(), res, split_lines(src));
    std::cout << "time " << ms << " ms\n";

    for (int n : o.dump_states) {
        point_id p = resolve_point(pl.graph(), n);
        std::cout << "state at point " << p << ":\n"
                  << res.states[p].dump(pl.graph(), pl.ab());
    }
    if (!o.json_out.empty()) {
        std::ofstream jf(o.json_out, std::ios::binary);
        if (!jf) throw front_error("cannot write " + o.json_out);
        jf << report_json(pl.graph(), pl.ab(), res).dump(2) << "\n";
    }
    if (res.capped || !res.postfix_ok) return 2;
    return res.alarms.empty() ? 0 : 1;
}

struct run_opts {
    std::string file, abi_path;
    std::vector<std::string> volatiles;
    uint64_t seed = 1;
    uint64_t max_steps = 1u << 20;
};

int cmd_run(const run_opts& o) {
    std::string src = read_file(o.file);
    pipeline pl(src, base_name(o.file), load_abi_text(o.abi_path), {});
    run_config rc{o.seed, o.max_steps, pl.volatile_ranges(parse_volatiles(o.volatiles))};
    executor ex(pl.graph(), pl.ab(), rc);
    ex.set_trace(&std::cout);
    while (ex.step()) {
    }
    std::cout << "steps " << ex.steps() << ", events " << ex.events().size() << "\n";
    for (auto& e : ex.events())
        std::cout << "event at point " << e.at << ": " << alarm_name(e.kind) << ": "
                  << e.detail << "\n";
    if (!ex.events().empty()) return 3;
    if (ex.aborted()) {
        std::cout << "step limit exceeded\n";
        return 4;
    }
    return 0;
}

struct diff_opts {
    std::string file, abi_path;
    std::vector<std::string> volatiles;
    uint32_t seeds = 100;
    uint64_t max_steps = 1u << 20;
    bool disable_overlap_removal = false;
    analysis_config conf;
};

int cmd_diff(const diff_opts& o) {
    std::string src = read_file(o.file);
    pipeline pl(src, base_name(o.file), load_abi_text(o.abi_path), {o.conf.unroll});
    analysis_config conf = o.conf;
    conf.disable_overlap_removal = o.disable_overlap_removal;
    conf.inputs = pl.volatile_ranges(parse_volatiles(o.volatiles));

    analyzer an(pl.graph(), pl.ab(), conf);
    analysis_result res = an.run();
    if (res.capped) {
        std::cout << "analysis hit the iteration cap\n";
        return 2;
    }
    diff_result dr =
        run_diff(pl.graph(), pl.ab(), res, conf.inputs, o.seeds, o.max_steps);
    std::cout << "seeds " << dr.seeds_run << ", points checked " << dr.points_checked
              << ", alarms " << res.alarms.size() << "\n";
    for (auto& f : dr.gamma_failures)
        std::cout << "inclusion failure: seed " << f.seed << ", point " << f.point << ": "
                  << f.what << "\n";
    for (auto& f : dr.uncovered)
        std::cout << "uncovered event: seed " << f.seed << ", point " << f.point << ": "
                  << f.what << "\n";
    if (dr.ok()) {
        std::cout << "ok\n";
        return 0;
    }
    return 1;
}

int cmd_corpus(const std::string& dir, const std::string& abi_path, bool update) {
    analysis_config conf;
    std::vector<corpus_entry> entries = run_corpus(dir, load_abi_text(abi_path), conf);
    int bad = 0;
    for (auto& ce : entries) {
        if (!ce.error.empty()) {
            std::cout << ce.path << ": error: " << ce.error << "\n";
            ++bad;
        } else if (update && (ce.want_missing || !ce.passed)) {
            std::filesystem::path ex(ce.path);
            ex.replace_extension(".expect");
            std::ofstream out(ex, std::ios::binary);
            out << ce.got;
            std::cout << ce.path << ": wrote " << ex.string() << "\n";
        } else if (ce.want_missing) {
            std::cout << ce.path << ": no .expect file\n";
            ++bad;
        } else if (!ce.passed) {
            std::cout << ce.path << ": mismatch\n--- expected\n"
                      << ce.want << "--- got\n"
                      << ce.got;
            ++bad;
        } else
            std::cout << ce.path << ": ok\n";
    }
    std::cout << entries.size() - bad << "/" << entries.size() << " passed\n";
    if (entries.empty()) {
        std::cout << "no .c files in " << dir << "\n";
        return 2;
    }
    return bad ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"byte-level value analyzer with a concrete oracle"};
    app.require_subcommand(1);

    analyze_opts ao;
    CLI::App* an = app.add_subcommand("analyze", "analyze a source file");
    an->add_option("file", ao.file)->required();
    an->add_option("--abi", ao.abi_path, "layout config path");
    an->add_option("--json", ao.json_out, "write the JSON report here");
    an->add_option("--unroll", ao.conf.unroll, "peeled iterations for copy loops");
    an->add_option("--widen-delay", ao.conf.widen_delay);
    an->add_option("--fanout", ao.conf.fanout, "max locations per access");
    an->add_option("--volatile", ao.volatiles, "VAR=LO..HI input range")->take_all();
    an->add_flag("--dump-cfg", ao.dump_cfg, "print the lowered graph");
    an->add_option("--dump-state", ao.dump_states, "print the state at a label or point")
        ->take_all();
    an->add_flag("--disable-overlap-removal", ao.disable_overlap_removal,
                 "soundness negative control, keeps stale overlapping cells");

    run_opts ro;
    CLI::App* rn = app.add_subcommand("run", "execute one seeded concrete trace");
    rn->add_option("file", ro.file)->required();
    rn->add_option("--abi", ro.abi_path);
    rn->add_option("--seed", ro.seed);
    rn->add_option("--max-steps", ro.max_steps);
    rn->add_option("--volatile", ro.volatiles)->take_all();

    diff_opts dopt;
    CLI::App* df = app.add_subcommand("diff", "check seeded runs against the analysis");
    df->add_option("file", dopt.file)->required();
    df->add_option("--abi", dopt.abi_path);
    df->add_option("--seeds", dopt.seeds)->required();
    df->add_option("--max-steps", dopt.max_steps);
    df->add_option("--unroll", dopt.conf.unroll);
    df->add_option("--widen-delay", dopt.conf.widen_delay);
    df->add_option("--fanout", dopt.conf.fanout);
    df->add_option("--volatile", dopt.volatiles)->take_all();
    df->add_flag("--disable-overlap-removal", dopt.disable_overlap_removal);

    std::string corpus_dir, corpus_abi;
    CLI::App* cp = app.add_subcommand("corpus", "run every .c/.expect pair in a directory");
    cp->add_option("dir", corpus_dir)->required();
    cp->add_option("--abi", corpus_abi);
    bool corpus_update = false;
    cp->add_flag("--update", corpus_update, "write .expect files from current output");

    CLI11_PARSE(app, argc, argv);
    try {
        if (an->parsed()) return cmd_analyze(ao);
        if (rn->parsed()) return cmd_run(ro);
        if (df->parsed()) return cmd_diff(dopt);
        if (cp->parsed()) return cmd_corpus(corpus_dir, corpus_abi, corpus_update);
    } catch (const front_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
