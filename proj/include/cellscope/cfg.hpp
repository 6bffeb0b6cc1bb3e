#pragma once

#include <deque>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ctypes.hpp"

namespace cellscope {

using var_id = uint32_t;
using func_id = uint32_t;
using point_id = uint32_t;

constexpr var_id kNoVar = ~var_id(0);

// Base of a pointer value: a variable, a function, the null pointer, or the
// invalid pointer (the result of erroneous pointer computations and of
// dangling references after scope exit).
struct base_ref {
    enum class kind : uint8_t { var, func, null, omega } k = kind::null;
    uint32_t id = 0;

    static base_ref var(var_id v) { return {kind::var, v}; }
    static base_ref func(func_id f) { return {kind::func, f}; }
    static base_ref null() { return {kind::null, 0}; }
    static base_ref omega() { return {kind::omega, 0}; }

    bool operator==(const base_ref& o) const { return k == o.k && id == o.id; }
    bool operator<(const base_ref& o) const { return k != o.k ? k < o.k : id < o.id; }
};

// Lowered expressions: mathematical constants, variable addresses, typed
// dereferences, typed operators, scalar casts, and the fresh-input form that
// volatile reads lower to.
struct lexpr;
using lexpr_ref = const lexpr*;

enum class lop : uint8_t {
    add, sub, mul, div, mod,
    shl, shr, band, bor, bxor,
    eq, ne, lt, le, gt, ge,
    land, lor,
    neg, bnot, lnot,
};

inline const char* lop_name(lop o) {
    switch (o) {
    case lop::add: return "+";
    case lop::sub: return "-";
    case lop::mul: return "*";
    case lop::div: return "/";
    case lop::mod: return "%";
    case lop::shl: return "<<";
    case lop::shr: return ">>";
    case lop::band: return "&";
    case lop::bor: return "|";
    case lop::bxor: return "^";
    case lop::eq: return "==";
    case lop::ne: return "!=";
    case lop::lt: return "<";
    case lop::le: return "<=";
    case lop::gt: return ">";
    case lop::ge: return ">=";
    case lop::land: return "&&";
    case lop::lor: return "||";
    case lop::neg: return "-";
    case lop::bnot: return "~";
    case lop::lnot: return "!";
    }
    return "?";
}

struct lexpr {
    enum class kind : uint8_t { num, fnum, addr, deref, bin, un, cast, input } k;
    i128 ival = 0;                     // num
    double fval = 0;                   // fnum
    base_ref base;                     // addr (var or func)
    scalar_type tau = scalar_type::sint; // deref type, bin/un result type, cast target
    lop op = lop::add;                 // bin/un
    lexpr_ref a = nullptr, b = nullptr;
    var_id vol_var = kNoVar;           // input: the volatile variable read
};

// One edge instruction. Scalar assignment stores a recomposed value through a
// typed dereference; copy moves raw bytes between same-typed windows; guard
// keeps states in which the expression may evaluate to zero. A guard on the
// constant 0 doubles as a skip.
struct inst {
    enum class kind : uint8_t { assign, copy, guard } k = inst::kind::guard;
    scalar_type tau = scalar_type::sint; // assign/copy scalar type
    bool scalar_copy = true;             // copy: scalar (realizes cells) vs aggregate
    uint32_t nbytes = 0;                 // copy window size
    lexpr_ref dst = nullptr;             // assign/copy destination address
    lexpr_ref src = nullptr;             // assign value / copy source address
    lexpr_ref cond = nullptr;            // guard expression

    static inst skip();
};

struct variable {
    var_id id = 0;
    std::string name;     // display name, context-qualified for locals
    const ctype* type = nullptr;
    uint32_t size = 0;
    bool is_static = false; // statics are zero-initialized, locals start uninitialized
    bool is_volatile = false;
    uint32_t ctx = 0;       // owning context (0 = globals)
};

struct function_info {
    func_id id = 0;
    std::string name;
    const ctype* type = nullptr; // func node
};

// Inlining context: one frame per active call. Context 0 is the root (main).
struct context {
    uint32_t id = 0;
    uint32_t parent = 0;
    std::string label;            // e.g. "main" or "memcopy#2"
    std::vector<var_id> frame;    // variables created on entry, deleted on exit
};

struct control_point {
    point_id id = 0;
    sloc loc;
    uint32_t ctx = 0;
};

struct cfg_edge {
    point_id src = 0, dst = 0;
    inst in;
};

struct cfg {
    std::string file;
    std::vector<variable> vars;
    std::vector<function_info> funcs;
    std::vector<context> contexts; // [0] = root
    std::vector<control_point> points;
    std::vector<cfg_edge> edges;
    std::vector<std::vector<uint32_t>> out_edges; // point -> edge indices, creation order
    point_id entry = 0, exit = 0;
    std::map<int, std::vector<point_id>> labels; // __point markers
    std::deque<lexpr> expr_pool;

    const variable& var(var_id v) const { return vars[v]; }

    // Variables live at a point: globals plus the frames on the context chain.
    std::vector<var_id> live_vars(point_id p) const {
        std::vector<var_id> out;
        for (auto& v : vars)
            if (v.ctx == 0) out.push_back(v.id);
        uint32_t c = points[p].ctx;
        while (c != 0) {
            for (var_id v : contexts[c].frame) out.push_back(v);
            c = contexts[c].parent;
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    point_id label_point(int n) const {
        auto it = labels.find(n);
        if (it == labels.end() || it->second.empty())
            throw front_error("no __point(" + std::to_string(n) + ") marker");
        return it->second.front();
    }
};

inline inst inst::skip() {
    // the guard "0 == 0 ?" always holds
    static const lexpr zero = [] {
        lexpr e;
        e.k = lexpr::kind::num;
        e.ival = 0;
        return e;
    }();
    inst g;
    g.k = inst::kind::guard;
    g.cond = &zero;
    return g;
}

// ---- printing ----

inline void print_lexpr(std::ostream& os, const cfg& g, lexpr_ref e) {
    switch (e->k) {
    case lexpr::kind::num: os << i128_str(e->ival); return;
    case lexpr::kind::fnum: os << e->fval; return;
    case lexpr::kind::addr:
        if (e->base.k == base_ref::kind::var)
            os << '&' << g.vars[e->base.id].name;
        else
            os << '&' << g.funcs[e->base.id].name;
        return;
    case lexpr::kind::deref:
        os << '*' << scalar_name(e->tau) << '(';
        print_lexpr(os, g, e->a);
        os << ')';
        return;
    case lexpr::kind::bin:
        os << '(';
        print_lexpr(os, g, e->a);
        os << ' ' << lop_name(e->op) << ' ';
        print_lexpr(os, g, e->b);
        os << ')';
        return;
    case lexpr::kind::un:
        os << lop_name(e->op);
        print_lexpr(os, g, e->a);
        return;
    case lexpr::kind::cast:
        os << '(' << scalar_name(e->tau) << ')';
        print_lexpr(os, g, e->a);
        return;
    case lexpr::kind::input: os << "input(" << g.vars[e->vol_var].name << ")"; return;
    }
}

inline std::string base_str(const cfg& g, base_ref b) {
    switch (b.k) {
    case base_ref::kind::var: return g.vars[b.id].name;
    case base_ref::kind::func: return g.funcs[b.id].name;
    case base_ref::kind::null: return "NULL";
    case base_ref::kind::omega: return "omega";
    }
    return "?";
}

inline std::string lexpr_str(const cfg& g, lexpr_ref e) {
    std::ostringstream os;
    print_lexpr(os, g, e);
    return os.str();
}

inline std::string inst_str(const cfg& g, const inst& in) {
    std::ostringstream os;
    switch (in.k) {
    case inst::kind::assign:
        os << '*' << scalar_name(in.tau) << '(';
        print_lexpr(os, g, in.dst);
        os << ") <- ";
        print_lexpr(os, g, in.src);
        break;
    case inst::kind::copy: {
        const char* t = in.scalar_copy ? scalar_name(in.tau) : nullptr;
        std::string ty = t ? t : "bytes" + std::to_string(in.nbytes);
        os << '*' << ty << '(';
        print_lexpr(os, g, in.dst);
        os << ") <- *" << ty << '(';
        print_lexpr(os, g, in.src);
        os << ')';
        break;
    }
    case inst::kind::guard:
        print_lexpr(os, g, in.cond);
        os << " == 0 ?";
        break;
    }
    return os.str();
}

inline std::string dump_cfg(const cfg& g) {
    std::ostringstream os;
    for (auto& e : g.edges)
        os << 'p' << e.src << " -> p" << e.dst << " : " << inst_str(g, e.in) << '\n';
    return os.str();
}

} // namespace cellscope
