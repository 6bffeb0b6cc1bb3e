#pragma once

#include <algorithm>
#include <functional>
#include <set>
#include <tuple>

#include "ast.hpp"
#include "cfg.hpp"

namespace cellscope {

struct lower_options {
    uint32_t unroll = 64;       // peeled iterations for loops containing copies
    uint32_t inline_depth = 32; // maximum call nesting
};

// Lowers the surface program to the three-instruction control-flow graph:
//  - every call is inlined (one context per call site, recursion rejected),
//  - field and index accesses become base address plus byte offsets,
//  - conditions become complementary guard pairs with short-circuiting,
//  - volatile reads are preceded by a fresh-input refresh of the variable,
//  - loops whose body stores through a dereference are peeled opt.unroll
//    times in front of the widened remainder.
class lowerer {
public:
    lowerer(const ast_program& prog, type_table& types, lower_options opt)
        : prog_(prog), types_(types), abi_(types.layout_abi()), opt_(opt) {}

    cfg lower() {
        g_.file = prog_.file;
        g_.contexts.push_back({0, 0, "<globals>", {}});
        scopes_.emplace_back(); // globals
        barriers_.push_back(0);
        for (auto& gv : prog_.globals) {
            if (scopes_[0].count(gv.name)) throw front_error("redefinition of '" + gv.name + "'", gv.loc);
            if (gv.is_volatile && !gv.type->is_scalar())
                throw front_error("volatile variables must be scalar", gv.loc);
            var_id id = add_var(gv.name, gv.type, true, gv.is_volatile, 0);
            scopes_[0][gv.name] = id;
        }
        for (auto& f : prog_.funcs) {
            if (funcs_.count(f.name)) throw front_error("redefinition of function '" + f.name + "'", f.loc);
            funcs_[f.name] = &f;
            func_id id = func_id(g_.funcs.size());
            const ctype* fty = make_func_type(f);
            g_.funcs.push_back({id, f.name, fty});
            func_ids_[f.name] = id;
        }
        collect_address_taken();
        auto it = funcs_.find("main");
        if (it == funcs_.end()) throw front_error("no main function");
        if (!it->second->params.empty()) throw front_error("main takes no parameters", it->second->loc);

        g_.entry = new_point(it->second->loc, 0);
        cur_ = g_.entry;
        g_.exit = inline_function(*it->second, {}, kNoVar);
        cur_ = g_.exit;

        g_.out_edges.resize(g_.points.size());
        for (uint32_t i = 0; i < g_.edges.size(); ++i) g_.out_edges[g_.edges[i].src].push_back(i);
        return std::move(g_);
    }

private:
    // ---- small helpers ----

    struct value {
        lexpr_ref e = nullptr;
        const ctype* type = nullptr;
    };
    struct place {
        lexpr_ref addr = nullptr;
        const ctype* type = nullptr;
        var_id vol_root = kNoVar; // set when rooted in a volatile variable
    };

    var_id add_var(const std::string& name, const ctype* ty, bool is_static, bool is_vol, uint32_t ctx) {
        variable v;
        v.id = var_id(g_.vars.size());
        v.name = ctx == 0 ? name : g_.contexts[ctx].label + "::" + name;
        v.type = ty;
        v.size = types_.size_of(ty);
        v.is_static = is_static;
        v.is_volatile = is_vol;
        v.ctx = ctx;
        g_.vars.push_back(v);
        if (ctx != 0) g_.contexts[ctx].frame.push_back(v.id);
        return v.id;
    }

    var_id fresh_temp(const ctype* ty) {
        return add_var("__t" + std::to_string(temp_ctr_++), ty, false, false, cur_ctx_);
    }

    point_id new_point(sloc at, uint32_t ctx) {
        control_point p;
        p.id = point_id(g_.points.size());
        p.loc = at;
        p.ctx = ctx;
        g_.points.push_back(p);
        return p.id;
    }
    point_id new_point(sloc at) { return new_point(at, cur_ctx_); }

    void emit_edge(point_id src, inst in, point_id dst) { g_.edges.push_back({src, dst, in}); }

    void emit(inst in, sloc at) {
        point_id nxt = new_point(at);
        emit_edge(cur_, std::move(in), nxt);
        cur_ = nxt;
    }

    void emit_jump(point_id dst) { emit_edge(cur_, inst::skip(), dst); }

    // ---- expression pool ----

    lexpr* pool(lexpr e) {
        g_.expr_pool.push_back(e);
        return &g_.expr_pool.back();
    }
    lexpr_ref make_num(i128 v) {
        lexpr e;
        e.k = lexpr::kind::num;
        e.ival = v;
        return pool(e);
    }
    lexpr_ref make_fnum(double v) {
        lexpr e;
        e.k = lexpr::kind::fnum;
        e.fval = v;
        return pool(e);
    }
    lexpr_ref make_addr(base_ref b) {
        lexpr e;
        e.k = lexpr::kind::addr;
        e.base = b;
        return pool(e);
    }
    lexpr_ref make_deref(scalar_type t, lexpr_ref a) {
        lexpr e;
        e.k = lexpr::kind::deref;
        e.tau = t;
        e.a = a;
        return pool(e);
    }
    lexpr_ref make_input(var_id v) {
        lexpr e;
        e.k = lexpr::kind::input;
        e.vol_var = v;
        return pool(e);
    }
    lexpr_ref make_un(lop op, scalar_type t, lexpr_ref a) {
        lexpr e;
        e.k = lexpr::kind::un;
        e.op = op;
        e.tau = t;
        e.a = a;
        return pool(e);
    }

    lexpr_ref make_bin(lop op, scalar_type t, lexpr_ref a, lexpr_ref b) {
        // fold numeric constants when the result is exact and in range
        if (a->k == lexpr::kind::num && b->k == lexpr::kind::num && is_integer(t)) {
            i128 x = a->ival, y = b->ival;
            bool ok = true;
            i128 r = 0;
            switch (op) {
            case lop::add: r = x + y; break;
            case lop::sub: r = x - y; break;
            case lop::mul: r = x * y; break;
            case lop::div: ok = y != 0; r = ok ? x / y : 0; break;
            case lop::mod: ok = y != 0; r = ok ? x % y : 0; break;
            default: ok = false;
            }
            if (ok && r >= abi_.type_min(t) && r <= abi_.type_max(t)) return make_num(r);
        }
        // collapse constant chains in pointer offset arithmetic
        if (op == lop::add && t == scalar_type::ptr && b->k == lexpr::kind::num) {
            if (a->k == lexpr::kind::bin && a->op == lop::add && a->tau == scalar_type::ptr &&
                a->b->k == lexpr::kind::num && a->b->ival >= 0 && b->ival >= 0)
                return make_bin(lop::add, scalar_type::ptr, a->a, make_num(a->b->ival + b->ival));
            if (b->ival == 0 && (a->k == lexpr::kind::addr || a->tau == scalar_type::ptr ||
                                 a->k == lexpr::kind::deref))
                return a;
        }
        lexpr e;
        e.k = lexpr::kind::bin;
        e.op = op;
        e.tau = t;
        e.a = a;
        e.b = b;
        return pool(e);
    }

    lexpr_ref make_cast(scalar_type t, lexpr_ref a) {
        if (a->k == lexpr::kind::num && is_integer(t)) {
            // integer casts wrap silently
            i128 span = i128(1) << (8 * abi_.sizeof_(t));
            i128 v = floor_mod(a->ival, span);
            if (is_signed_int(t) && v > abi_.type_max(t)) v -= span;
            return make_num(v);
        }
        if (a->k == lexpr::kind::num && is_float(t) && a->ival >= INT64_MIN && a->ival <= INT64_MAX)
            return make_fnum(double(int64_t(a->ival)));
        lexpr e;
        e.k = lexpr::kind::cast;
        e.tau = t;
        e.a = a;
        return pool(e);
    }

    // ---- typing ----

    const ctype* make_func_type(const ast_func& f) {
        std::vector<const ctype*> ps;
        for (auto& p : f.params) ps.push_back(p.type);
        return types_.make_func(f.ret, std::move(ps));
    }

    static bool type_equal(const ctype* a, const ctype* b) {
        if (a == b) return true;
        if (a->k != b->k) return false;
        switch (a->k) {
        case ctype::kind::scalar: return a->st == b->st;
        case ctype::kind::pointer: return type_equal(a->pointee, b->pointee);
        case ctype::kind::array: return a->count == b->count && type_equal(a->elem, b->elem);
        case ctype::kind::func: {
            if (!type_equal(a->ret, b->ret) || a->params.size() != b->params.size()) return false;
            for (size_t i = 0; i < a->params.size(); ++i)
                if (!type_equal(a->params[i], b->params[i])) return false;
            return true;
        }
        case ctype::kind::void_t: return true;
        default: return false; // records/overlays are nominal
        }
    }

    scalar_type promote(scalar_type t) const {
        if (!is_integer(t)) return t;
        uint32_t isz = abi_.sizeof_(scalar_type::sint);
        if (abi_.sizeof_(t) < isz) return scalar_type::sint;
        return t;
    }

    scalar_type usual_conv(scalar_type a, scalar_type b) const {
        if (a == scalar_type::dbl || b == scalar_type::dbl) return scalar_type::dbl;
        if (a == scalar_type::flt || b == scalar_type::flt) return scalar_type::flt;
        a = promote(a);
        b = promote(b);
        if (a == b) return a;
        uint32_t sa = abi_.sizeof_(a), sb = abi_.sizeof_(b);
        if (sa != sb) return sa > sb ? a : b;
        return is_unsigned_int(a) ? a : b;
    }

    value convert(value v, const ctype* to, sloc at) {
        if (type_equal(v.type, to)) return v;
        if (!v.type || !to) throw front_error("bad conversion", at);
        if (to->is_scalar() && v.type->is_scalar()) {
            scalar_type st = to->as_scalar(), sf = v.type->as_scalar();
            if (st == sf) return {v.e, to}; // pointer retyping
            if (st == scalar_type::ptr || sf == scalar_type::ptr)
                return {make_cast(st, v.e), to};
            return {make_cast(st, v.e), to};
        }
        throw front_error("cannot convert " + type_table::name_of(v.type) + " to " + type_table::name_of(to), at);
    }

    // ---- name lookup ----

    var_id lookup(const std::string& name, sloc at) {
        for (size_t i = scopes_.size(); i-- > barriers_.back();) {
            auto it = scopes_[i].find(name);
            if (it != scopes_[i].end()) return it->second;
        }
        auto g = scopes_[0].find(name);
        if (g != scopes_[0].end()) return g->second;
        throw front_error("unknown identifier '" + name + "'", at);
    }

    // ---- lvalues / loads ----

    place lower_lvalue(const ast_expr* e) {
        switch (e->k) {
        case ast_expr::kind::ident: {
            var_id v = lookup(e->name, e->loc);
            place p;
            p.addr = make_addr(base_ref::var(v));
            p.type = g_.vars[v].type;
            if (g_.vars[v].is_volatile) p.vol_root = v;
            return p;
        }
        case ast_expr::kind::deref: {
            value pv = lower_rvalue(e->a.get());
            const ctype* t = decay(pv).type;
            if (t->k != ctype::kind::pointer) throw front_error("dereference of non-pointer", e->loc);
            if (t->pointee->k == ctype::kind::void_t || t->pointee->k == ctype::kind::func)
                throw front_error("dereference of " + type_table::name_of(t) + " value", e->loc);
            return {pv.e, t->pointee, kNoVar};
        }
        case ast_expr::kind::index: {
            auto [addr, elem, vol] = index_addr(e);
            return {addr, elem, vol};
        }
        case ast_expr::kind::member: {
            place base = lower_lvalue(e->a.get());
            const cfield* f = types_.find_field(base.type, e->name);
            if (!f) throw front_error("no member '" + e->name + "' in " + type_table::name_of(base.type), e->loc);
            return {make_bin(lop::add, scalar_type::ptr, base.addr, make_num(f->offset)), f->type, base.vol_root};
        }
        case ast_expr::kind::arrow: {
            value pv = lower_rvalue(e->a.get());
            const ctype* t = decay(pv).type;
            if (t->k != ctype::kind::pointer) throw front_error("'->' on non-pointer", e->loc);
            const cfield* f = types_.find_field(t->pointee, e->name);
            if (!f) throw front_error("no member '" + e->name + "' in " + type_table::name_of(t->pointee), e->loc);
            return {make_bin(lop::add, scalar_type::ptr, pv.e, make_num(f->offset)), f->type, kNoVar};
        }
        case ast_expr::kind::cast: {
            // writable cast lvalue: *(T*)p style comes through deref; a direct
            // cast is not an lvalue
            break;
        }
        default: break;
        }
        throw front_error("expression is not assignable", e->loc);
    }

    std::tuple<lexpr_ref, const ctype*, var_id> index_addr(const ast_expr* e) {
        // base may be an array lvalue or a pointer rvalue
        const ast_expr* be = e->a.get();
        lexpr_ref base = nullptr;
        const ctype* elem = nullptr;
        var_id vol = kNoVar;
        if (is_lvalue_expr(be)) {
            place bp = lower_lvalue(be);
            if (bp.type->k == ctype::kind::array) {
                base = bp.addr;
                elem = bp.type->elem;
                vol = bp.vol_root;
            } else if (bp.type->k == ctype::kind::pointer) {
                value pv = load(bp, be->loc);
                base = pv.e;
                elem = bp.type->pointee;
            } else {
                throw front_error("subscripted value is not array or pointer", e->loc);
            }
        } else {
            value pv = decay(lower_rvalue(be));
            if (pv.type->k != ctype::kind::pointer)
                throw front_error("subscripted value is not array or pointer", e->loc);
            base = pv.e;
            elem = pv.type->pointee;
        }
        if (elem->k == ctype::kind::void_t || elem->k == ctype::kind::func)
            throw front_error("cannot index " + type_table::name_of(elem), e->loc);
        value ix = integer_rvalue(e->b.get());
        lexpr_ref off = scale_index(ix, types_.size_of(elem));
        return {make_bin(lop::add, scalar_type::ptr, base, off), elem, vol};
    }

    static bool is_lvalue_expr(const ast_expr* e) {
        switch (e->k) {
        case ast_expr::kind::ident:
        case ast_expr::kind::deref:
        case ast_expr::kind::index:
        case ast_expr::kind::member:
        case ast_expr::kind::arrow: return true;
        default: return false;
        }
    }

    lexpr_ref scale_index(value ix, uint32_t elem_size) {
        scalar_type at = abi_.address_type();
        lexpr_ref i = convert(ix, types_.scalar(at), {}).e;
        if (elem_size == 1) return i;
        return make_bin(lop::mul, at, i, make_num(elem_size));
    }

    // Reads a scalar place; refreshes the variable first when it is volatile.
    value load(place p, sloc at) {
        if (!p.type->is_scalar())
            throw front_error("aggregate value used where a scalar is required", at);
        if (p.vol_root != kNoVar) refresh_volatile(p.vol_root, at);
        return {make_deref(p.type->as_scalar(), p.addr), p.type};
    }

    void refresh_volatile(var_id v, sloc at) {
        inst in;
        in.k = inst::kind::assign;
        in.tau = g_.vars[v].type->as_scalar();
        in.dst = make_addr(base_ref::var(v));
        in.src = make_input(v);
        emit(std::move(in), at);
    }

    // array-to-pointer decay for rvalues
    value decay(value v) {
        if (v.type && v.type->k == ctype::kind::array)
            return {v.e, types_.pointer_to(v.type->elem)};
        return v;
    }

    value integer_rvalue(const ast_expr* e) {
        value v = decay(lower_rvalue(e));
        if (!v.type->is_scalar() || v.type->as_scalar() == scalar_type::ptr || is_float(v.type->as_scalar()))
            throw front_error("integer expression required", e->loc);
        return v;
    }

    // ---- rvalues ----

    value lower_rvalue(const ast_expr* e) {
        switch (e->k) {
        case ast_expr::kind::int_lit: {
            scalar_type t = scalar_type::sint;
            if (e->ival > abi_.type_max(t)) t = scalar_type::slong;
            if (e->ival > abi_.type_max(t)) t = scalar_type::sllong;
            if (e->ival > abi_.type_max(t)) t = scalar_type::ullong;
            return {make_num(e->ival), types_.scalar(t)};
        }
        case ast_expr::kind::float_lit: return {make_fnum(e->fval), types_.scalar(scalar_type::dbl)};
        case ast_expr::kind::ident: {
            // function designators only make sense under & and calls
            if (!scope_has(e->name) && func_ids_.count(e->name))
                throw front_error("function '" + e->name + "' used as a value (take its address)", e->loc);
            place p = lower_lvalue(e);
            if (p.type->k == ctype::kind::array) return decay(value{p.addr, p.type});
            if (p.type->is_aggregate()) return {p.addr, p.type}; // aggregate rvalue = its address
            return load(p, e->loc);
        }
        case ast_expr::kind::member:
        case ast_expr::kind::arrow:
        case ast_expr::kind::index:
        case ast_expr::kind::deref: {
            place p = lower_lvalue(e);
            if (p.type->k == ctype::kind::array) return decay(value{p.addr, p.type});
            if (p.type->is_aggregate()) return {p.addr, p.type};
            return load(p, e->loc);
        }
        case ast_expr::kind::addr_of: {
            const ast_expr* t = e->a.get();
            if (t->k == ast_expr::kind::ident && !scope_has(t->name) && func_ids_.count(t->name)) {
                func_id f = func_ids_.at(t->name);
                return {make_addr(base_ref::func(f)), types_.pointer_to(g_.funcs[f].type)};
            }
            place p = lower_lvalue(t);
            return {p.addr, types_.pointer_to(p.type)};
        }
        case ast_expr::kind::unary: return lower_unary(e);
        case ast_expr::kind::binary: return lower_binary(e);
        case ast_expr::kind::assign:
        case ast_expr::kind::compound_assign: {
            place p = lower_assignment(e);
            return load(p, e->loc);
        }
        case ast_expr::kind::cast: {
            const ctype* to = e->type;
            value v = decay(lower_rvalue(e->a.get()));
            if (to->k == ctype::kind::void_t) return {make_num(0), types_.scalar(scalar_type::sint)};
            if (!to->is_scalar()) throw front_error("cast to aggregate type", e->loc);
            if (!v.type->is_scalar()) throw front_error("cast of aggregate value", e->loc);
            return convert(v, to, e->loc);
        }
        case ast_expr::kind::sizeof_type:
            return {make_num(types_.size_of(e->type)), types_.scalar(scalar_type::uint)};
        case ast_expr::kind::sizeof_expr: {
            const ctype* t = type_of_unevaluated(e->a.get());
            return {make_num(types_.size_of(t)), types_.scalar(scalar_type::uint)};
        }
        case ast_expr::kind::call: return lower_call(e, true);
        case ast_expr::kind::comma: {
            lower_discard(e->a.get());
            return lower_rvalue(e->b.get());
        }
        case ast_expr::kind::pre_inc:
        case ast_expr::kind::pre_dec: {
            place p = incdec(e->a.get(), e->k == ast_expr::kind::pre_inc, e->loc);
            return load(p, e->loc);
        }
        case ast_expr::kind::post_inc:
        case ast_expr::kind::post_dec: {
            // save the old value in a temp, then bump
            place p = lower_lvalue(e->a.get());
            if (!p.type->is_scalar()) throw front_error("++/-- needs a scalar", e->loc);
            value old = load(p, e->loc);
            var_id t = fresh_temp(p.type);
            store_scalar(place{make_addr(base_ref::var(t)), p.type, kNoVar}, old, e->loc);
            incdec_place(p, e->k == ast_expr::kind::post_inc, e->loc);
            return load(place{make_addr(base_ref::var(t)), p.type, kNoVar}, e->loc);
        }
        }
        throw front_error("unsupported expression", e->loc);
    }

    bool scope_has(const std::string& name) {
        for (size_t i = scopes_.size(); i-- > barriers_.back();)
            if (scopes_[i].count(name)) return true;
        return scopes_[0].count(name) != 0;
    }

    // static type of an expression without emitting any edge (sizeof)
    const ctype* type_of_unevaluated(const ast_expr* e) {
        size_t save_pool = g_.expr_pool.size();
        size_t save_pts = g_.points.size();
        size_t save_edges = g_.edges.size();
        size_t save_vars = g_.vars.size();
        point_id save_cur = cur_;
        value v = lower_rvalue(e); // may emit; rolled back below
        const ctype* t = v.type;
        g_.edges.resize(save_edges);
        g_.points.resize(save_pts);
        while (g_.vars.size() > save_vars) {
            auto& fr = g_.contexts[g_.vars.back().ctx].frame;
            if (!fr.empty() && fr.back() == g_.vars.back().id) fr.pop_back();
            g_.vars.pop_back();
        }
        while (g_.expr_pool.size() > save_pool) g_.expr_pool.pop_back();
        cur_ = save_cur;
        return t;
    }

    value lower_unary(const ast_expr* e) {
        value a = decay(lower_rvalue(e->a.get()));
        if (!a.type->is_scalar()) throw front_error("scalar operand required", e->loc);
        scalar_type at = a.type->as_scalar();
        switch (e->op) {
        case ast_op::neg: {
            if (at == scalar_type::ptr) throw front_error("cannot negate a pointer", e->loc);
            scalar_type rt = promote(at);
            value c = convert(a, types_.scalar(rt), e->loc);
            return {make_un(lop::neg, rt, c.e), types_.scalar(rt)};
        }
        case ast_op::bnot: {
            if (!is_integer(at)) throw front_error("'~' needs an integer", e->loc);
            scalar_type rt = promote(at);
            value c = convert(a, types_.scalar(rt), e->loc);
            return {make_un(lop::bnot, rt, c.e), types_.scalar(rt)};
        }
        case ast_op::lnot:
            return {make_un(lop::lnot, scalar_type::sint, a.e), types_.scalar(scalar_type::sint)};
        default: break;
        }
        throw front_error("unsupported unary operator", e->loc);
    }

    value lower_binary(const ast_expr* e) {
        ast_op op = e->op;
        if (op == ast_op::land || op == ast_op::lor) return lower_bool_value(e);
        value a = decay(lower_rvalue(e->a.get()));
        value b = decay(lower_rvalue(e->b.get()));
        if (!a.type->is_scalar() || !b.type->is_scalar())
            throw front_error("scalar operands required", e->loc);
        scalar_type at = a.type->as_scalar(), bt = b.type->as_scalar();
        bool ap = at == scalar_type::ptr, bp = bt == scalar_type::ptr;

        auto cmp_op = [&](lop o, lexpr_ref x, lexpr_ref y) -> value {
            return {make_bin(o, scalar_type::sint, x, y), types_.scalar(scalar_type::sint)};
        };

        if (op == ast_op::add || op == ast_op::sub) {
            if (ap && bp) {
                if (op == ast_op::add) throw front_error("cannot add two pointers", e->loc);
                if (!type_equal(a.type->pointee, b.type->pointee))
                    throw front_error("pointer subtraction over different element types", e->loc);
                scalar_type dt = abi_.address_type();
                lexpr_ref diff = make_bin(lop::sub, dt, a.e, b.e);
                uint32_t es = types_.size_of(a.type->pointee);
                if (es > 1) diff = make_bin(lop::div, dt, diff, make_num(es));
                return {diff, types_.scalar(dt)};
            }
            if (ap || bp) {
                if (bp) std::swap(a, b), std::swap(at, bt);
                if (op == ast_op::sub && bp) throw front_error("integer minus pointer", e->loc);
                const ctype* pt = a.type;
                if (pt->pointee->k == ctype::kind::void_t || pt->pointee->k == ctype::kind::func)
                    throw front_error("arithmetic on " + type_table::name_of(pt), e->loc);
                value ib{b.e, b.type};
                lexpr_ref off = scale_index(ib, types_.size_of(pt->pointee));
                if (op == ast_op::sub) off = make_un(lop::neg, abi_.address_type(), off);
                return {make_bin(lop::add, scalar_type::ptr, a.e, off), pt};
            }
        }
        if (op == ast_op::eq || op == ast_op::ne || op == ast_op::lt || op == ast_op::le ||
            op == ast_op::gt || op == ast_op::ge) {
            static const std::pair<ast_op, lop> m[] = {
                {ast_op::eq, lop::eq}, {ast_op::ne, lop::ne}, {ast_op::lt, lop::lt},
                {ast_op::le, lop::le}, {ast_op::gt, lop::gt}, {ast_op::ge, lop::ge},
            };
            lop lo{};
            for (auto& [ao, l] : m)
                if (ao == op) lo = l;
            if (ap || bp) {
                // null pointer constants convert
                if (!ap) a = convert(a, b.type, e->loc);
                if (!bp) b = convert(b, a.type, e->loc);
                return cmp_op(lo, a.e, b.e);
            }
            scalar_type ct = usual_conv(at, bt);
            a = convert(a, types_.scalar(ct), e->loc);
            b = convert(b, types_.scalar(ct), e->loc);
            return cmp_op(lo, a.e, b.e);
        }
        if (ap || bp) throw front_error("invalid pointer operation", e->loc);
        scalar_type rt = usual_conv(at, bt);
        if ((op == ast_op::mod || op == ast_op::band || op == ast_op::bor || op == ast_op::bxor ||
             op == ast_op::shl || op == ast_op::shr) &&
            is_float(rt))
            throw front_error("integer operands required", e->loc);
        static const std::pair<ast_op, lop> arith[] = {
            {ast_op::add, lop::add},   {ast_op::sub, lop::sub}, {ast_op::mul, lop::mul},
            {ast_op::div, lop::div},   {ast_op::mod, lop::mod}, {ast_op::band, lop::band},
            {ast_op::bor, lop::bor},   {ast_op::bxor, lop::bxor}, {ast_op::shl, lop::shl},
            {ast_op::shr, lop::shr},
        };
        lop lo{};
        for (auto& [ao, l] : arith)
            if (ao == op) lo = l;
        if (op == ast_op::shl || op == ast_op::shr) {
            // shift result takes the promoted left type
            scalar_type lt = promote(at);
            value ca = convert(a, types_.scalar(lt), e->loc);
            value cb = convert(b, types_.scalar(promote(bt)), e->loc);
            return {make_bin(lo, lt, ca.e, cb.e), types_.scalar(lt)};
        }
        value ca = convert(a, types_.scalar(rt), e->loc);
        value cb = convert(b, types_.scalar(rt), e->loc);
        return {make_bin(lo, rt, ca.e, cb.e), types_.scalar(rt)};
    }

    value lower_bool_value(const ast_expr* e) {
        var_id t = fresh_temp(types_.scalar(scalar_type::sint));
        place tp{make_addr(base_ref::var(t)), types_.scalar(scalar_type::sint), kNoVar};
        point_id yes = new_point(e->loc), no = new_point(e->loc), join = new_point(e->loc);
        lower_cond(e, yes, no);
        cur_ = yes;
        store_scalar(tp, {make_num(1), types_.scalar(scalar_type::sint)}, e->loc);
        emit_jump(join);
        cur_ = no;
        store_scalar(tp, {make_num(0), types_.scalar(scalar_type::sint)}, e->loc);
        emit_jump(join);
        cur_ = join;
        return load(tp, e->loc);
    }

    // ---- assignments ----

    void store_scalar(place p, value v, sloc at) {
        scalar_type tau = p.type->as_scalar();
        value cv = convert(decay(v), p.type, at);
        inst in;
        in.k = inst::kind::assign;
        in.tau = tau;
        in.dst = p.addr;
        in.src = cv.e;
        // same-typed plain loads become copy instructions, which the byte-level
        // semantics treats exactly and the equality domain can track
        if (cv.e->k == lexpr::kind::deref && cv.e->tau == tau) {
            in.k = inst::kind::copy;
            in.scalar_copy = true;
            in.nbytes = abi_.sizeof_(tau);
            in.src = cv.e->a;
        }
        emit(std::move(in), at);
    }

    place lower_assignment(const ast_expr* e) {
        if (e->k == ast_expr::kind::assign) {
            place p = lower_lvalue(e->a.get());
            if (p.type->is_aggregate()) {
                value rv = lower_rvalue(e->b.get());
                if (!rv.type || !type_equal(rv.type, p.type))
                    throw front_error("aggregate assignment requires identical types", e->loc);
                inst in;
                in.k = inst::kind::copy;
                in.scalar_copy = false;
                in.nbytes = types_.size_of(p.type);
                in.dst = p.addr;
                in.src = rv.e;
                emit(std::move(in), e->loc);
                return p;
            }
            value rv = lower_rvalue(e->b.get());
            store_scalar(p, rv, e->loc);
            return p;
        }
        // compound: lhs = lhs op rhs
        place p = lower_lvalue(e->a.get());
        if (!p.type->is_scalar()) throw front_error("compound assignment needs a scalar", e->loc);
        value lhsv = load(p, e->loc);
        value rhsv = decay(lower_rvalue(e->b.get()));
        value res = combine_for_compound(e->op, lhsv, rhsv, p, e->loc);
        store_scalar(p, res, e->loc);
        return p;
    }

    value combine_for_compound(ast_op op, value a, value b, const place& p, sloc at) {
        scalar_type at_ = a.type->as_scalar();
        if (at_ == scalar_type::ptr) {
            if (op != ast_op::add && op != ast_op::sub)
                throw front_error("invalid pointer operation", at);
            const ctype* pt = p.type;
            lexpr_ref off = scale_index(b, types_.size_of(pt->pointee));
            if (op == ast_op::sub) off = make_un(lop::neg, abi_.address_type(), off);
            return {make_bin(lop::add, scalar_type::ptr, a.e, off), pt};
        }
        scalar_type bt = b.type->as_scalar();
        scalar_type rt = usual_conv(at_, bt);
        static const std::pair<ast_op, lop> arith[] = {
            {ast_op::add, lop::add},   {ast_op::sub, lop::sub}, {ast_op::mul, lop::mul},
            {ast_op::div, lop::div},   {ast_op::mod, lop::mod}, {ast_op::band, lop::band},
            {ast_op::bor, lop::bor},   {ast_op::bxor, lop::bxor}, {ast_op::shl, lop::shl},
            {ast_op::shr, lop::shr},
        };
        lop lo{};
        for (auto& [ao, l] : arith)
            if (ao == op) lo = l;
        if (op == ast_op::shl || op == ast_op::shr) rt = promote(at_);
        value ca = convert(a, types_.scalar(rt), at);
        value cb = convert(b, types_.scalar(rt), at);
        return {make_bin(lo, rt, ca.e, cb.e), types_.scalar(rt)};
    }

    place incdec(const ast_expr* lv, bool inc, sloc at) {
        place p = lower_lvalue(lv);
        incdec_place(p, inc, at);
        return p;
    }

    void incdec_place(place p, bool inc, sloc at) {
        if (!p.type->is_scalar()) throw front_error("++/-- needs a scalar", at);
        value cur = load(p, at);
        value one{make_num(1), types_.scalar(scalar_type::sint)};
        value res = combine_for_compound(inc ? ast_op::add : ast_op::sub, cur, one, p, at);
        store_scalar(p, res, at);
    }

    void lower_discard(const ast_expr* e) {
        switch (e->k) {
        case ast_expr::kind::assign:
        case ast_expr::kind::compound_assign: lower_assignment(e); return;
        case ast_expr::kind::call: lower_call(e, false); return;
        case ast_expr::kind::comma:
            lower_discard(e->a.get());
            lower_discard(e->b.get());
            return;
        case ast_expr::kind::pre_inc:
        case ast_expr::kind::pre_dec: incdec(e->a.get(), e->k == ast_expr::kind::pre_inc, e->loc); return;
        case ast_expr::kind::post_inc:
        case ast_expr::kind::post_dec: incdec(e->a.get(), e->k == ast_expr::kind::post_inc, e->loc); return;
        default:
            lower_rvalue(e); // for volatile refresh side effects
            return;
        }
    }

    // ---- conditions ----

    void lower_cond(const ast_expr* e, point_id then_pt, point_id else_pt) {
        if (e->k == ast_expr::kind::binary && e->op == ast_op::land) {
            point_id mid = new_point(e->loc);
            lower_cond(e->a.get(), mid, else_pt);
            cur_ = mid;
            lower_cond(e->b.get(), then_pt, else_pt);
            return;
        }
        if (e->k == ast_expr::kind::binary && e->op == ast_op::lor) {
            point_id mid = new_point(e->loc);
            lower_cond(e->a.get(), then_pt, mid);
            cur_ = mid;
            lower_cond(e->b.get(), then_pt, else_pt);
            return;
        }
        if (e->k == ast_expr::kind::unary && e->op == ast_op::lnot) {
            lower_cond(e->a.get(), else_pt, then_pt);
            return;
        }
        value v = decay(lower_rvalue(e));
        if (!v.type->is_scalar()) throw front_error("condition must be scalar", e->loc);
        emit_guard_pair(v.e, then_pt, else_pt);
    }

    void emit_guard_pair(lexpr_ref e, point_id then_pt, point_id else_pt) {
        inst to_then;
        to_then.k = inst::kind::guard;
        to_then.cond = make_bin(lop::eq, scalar_type::sint, e, make_num(0));
        emit_edge(cur_, std::move(to_then), then_pt);
        inst to_else;
        to_else.k = inst::kind::guard;
        to_else.cond = e;
        emit_edge(cur_, std::move(to_else), else_pt);
    }

    // ---- calls ----

    struct fn_frame {
        point_id exit_pt = 0;
        var_id ret_var = kNoVar;
        const ctype* ret_type = nullptr;
    };

    void collect_address_taken() {
        std::function<void(const ast_expr*)> walk_e = [&](const ast_expr* e) {
            if (!e) return;
            if (e->k == ast_expr::kind::addr_of && e->a->k == ast_expr::kind::ident &&
                func_ids_.count(e->a->name))
                address_taken_.insert(e->a->name);
            walk_e(e->a.get());
            walk_e(e->b.get());
            for (auto& a : e->args) walk_e(a.get());
        };
        std::function<void(const ast_stmt*)> walk_s = [&](const ast_stmt* s) {
            if (!s) return;
            walk_e(s->e.get());
            walk_e(s->for_init.get());
            walk_e(s->for_update.get());
            for (auto& l : s->locals) walk_e(l.init.get());
            walk_s(s->then_s.get());
            walk_s(s->else_s.get());
            walk_s(s->loop_body.get());
            for (auto& b : s->body) walk_s(b.get());
        };
        for (auto& f : prog_.funcs) walk_s(f.body.get());
    }

    value lower_call(const ast_expr* e, bool want_value) {
        const ast_expr* callee = e->a.get();
        if (callee->k == ast_expr::kind::ident && !scope_has(callee->name)) {
            auto it = funcs_.find(callee->name);
            if (it == funcs_.end()) throw front_error("unknown function '" + callee->name + "'", e->loc);
            return inline_call(*it->second, e, want_value);
        }
        // call through a function pointer: dispatch over address-taken functions
        value fp = decay(lower_rvalue(callee));
        if (fp.type->k != ctype::kind::pointer || fp.type->pointee->k != ctype::kind::func)
            throw front_error("called object is not a function", e->loc);
        const ctype* fty = fp.type->pointee;
        if (fty->params.size() != e->args.size())
            throw front_error("call through function pointer with mismatched arity", e->loc);
        std::vector<const ast_func*> cands;
        for (auto& f : prog_.funcs) {
            if (!address_taken_.count(f.name)) continue;
            const ctype* cand_ty = g_.funcs[func_ids_.at(f.name)].type;
            if (type_equal(cand_ty, fty)) cands.push_back(&f);
        }
        var_id ret = kNoVar;
        if (want_value && fty->ret->k != ctype::kind::void_t) ret = fresh_temp(fty->ret);
        point_id join = new_point(e->loc);
        for (auto* f : cands) {
            point_id hit = new_point(e->loc), miss = new_point(e->loc);
            lexpr_ref is_f = make_bin(lop::eq, scalar_type::sint, fp.e,
                                      make_addr(base_ref::func(func_ids_.at(f->name))));
            emit_guard_pair(is_f, hit, miss);
            cur_ = hit;
            inline_call_into(*f, e, ret);
            emit_jump(join);
            cur_ = miss;
        }
        // no candidate matched: dereferencing the pointer as data faults on
        // every function base (functions have no extent)
        var_id trap = fresh_temp(types_.scalar(scalar_type::uchar));
        inst in;
        in.k = inst::kind::assign;
        in.tau = scalar_type::uchar;
        in.dst = make_addr(base_ref::var(trap));
        in.src = make_deref(scalar_type::uchar, fp.e);
        emit(std::move(in), e->loc);
        emit_jump(join);
        cur_ = join;
        if (ret != kNoVar)
            return load(place{make_addr(base_ref::var(ret)), fty->ret, kNoVar}, e->loc);
        return {make_num(0), types_.void_type()};
    }

    value inline_call(const ast_func& f, const ast_expr* e, bool want_value) {
        var_id ret = kNoVar;
        if (want_value && f.ret->k != ctype::kind::void_t) ret = fresh_temp(f.ret);
        inline_call_into(f, e, ret);
        if (ret != kNoVar) return load(place{make_addr(base_ref::var(ret)), f.ret, kNoVar}, e->loc);
        return {make_num(0), types_.void_type()};
    }

    void inline_call_into(const ast_func& f, const ast_expr* e, var_id ret_var) {
        if (e->args.size() != f.params.size())
            throw front_error("call to '" + f.name + "' with wrong argument count", e->loc);
        for (auto& s : inline_stack_)
            if (s == f.name) throw front_error("recursive call to '" + f.name + "'", e->loc);
        if (inline_stack_.size() >= opt_.inline_depth)
            throw front_error("call nesting exceeds the inline depth limit", e->loc);

        // evaluate arguments into caller-frame temporaries
        std::vector<var_id> argtmp;
        for (size_t i = 0; i < e->args.size(); ++i) {
            value av = decay(lower_rvalue(e->args[i].get()));
            const ctype* pty = f.params[i].type;
            var_id t = fresh_temp(pty);
            place tp{make_addr(base_ref::var(t)), pty, kNoVar};
            if (pty->is_aggregate()) {
                if (!type_equal(av.type, pty))
                    throw front_error("argument type mismatch in call to '" + f.name + "'", e->loc);
                inst in;
                in.k = inst::kind::copy;
                in.scalar_copy = false;
                in.nbytes = types_.size_of(pty);
                in.dst = tp.addr;
                in.src = av.e;
                emit(std::move(in), e->loc);
            } else {
                store_scalar(tp, av, e->loc);
            }
            argtmp.push_back(t);
        }

        uint32_t ctx = uint32_t(g_.contexts.size());
        g_.contexts.push_back({ctx, cur_ctx_, f.name + "#" + std::to_string(ctx), {}});
        point_id inside = new_point(f.loc, ctx);
        emit_edge(cur_, inst::skip(), inside); // frame creation
        cur_ = inside;
        uint32_t saved_ctx = cur_ctx_;
        cur_ctx_ = ctx;
        barriers_.push_back(scopes_.size());
        scopes_.emplace_back();
        inline_stack_.push_back(f.name);

        // bind parameters
        for (size_t i = 0; i < f.params.size(); ++i) {
            const ast_local& p = f.params[i];
            var_id pv = add_var(p.name, p.type, false, p.is_volatile, ctx);
            scopes_.back()[p.name] = pv;
            place pp{make_addr(base_ref::var(pv)), p.type, kNoVar};
            place ap{make_addr(base_ref::var(argtmp[i])), p.type, kNoVar};
            if (p.type->is_aggregate()) {
                inst in;
                in.k = inst::kind::copy;
                in.scalar_copy = false;
                in.nbytes = types_.size_of(p.type);
                in.dst = pp.addr;
                in.src = ap.addr;
                emit(std::move(in), p.loc.line ? p.loc : e->loc);
            } else {
                store_scalar(pp, load(ap, e->loc), e->loc);
            }
        }

        fn_frame fr;
        fr.exit_pt = new_point(f.loc, saved_ctx);
        fr.ret_var = ret_var;
        fr.ret_type = f.ret;
        frames_.push_back(fr);

        lower_stmt(f.body.get());
        emit_jump(fr.exit_pt); // fallthrough exit deletes the frame

        frames_.pop_back();
        inline_stack_.pop_back();
        scopes_.pop_back();
        barriers_.pop_back();
        cur_ctx_ = saved_ctx;
        cur_ = fr.exit_pt;
    }

    // top-level entry for main: same machinery, no arguments
    point_id inline_function(const ast_func& f, std::vector<var_id>, var_id) {
        ast_expr fake_call;
        fake_call.k = ast_expr::kind::call;
        fake_call.loc = f.loc;
        inline_call_into(f, &fake_call, kNoVar);
        return cur_;
    }

    // ---- statements ----

    void lower_stmt(const ast_stmt* s) {
        switch (s->k) {
        case ast_stmt::kind::empty: return;
        case ast_stmt::kind::expr: lower_discard(s->e.get()); return;
        case ast_stmt::kind::block: {
            scopes_.emplace_back();
            for (auto& b : s->body) lower_stmt(b.get());
            scopes_.pop_back();
            return;
        }
        case ast_stmt::kind::decl: {
            for (auto& l : s->locals) {
                if (l.is_volatile && !l.type->is_scalar())
                    throw front_error("volatile variables must be scalar", l.loc);
                var_id v = add_var(l.name, l.type, false, l.is_volatile, cur_ctx_);
                scopes_.back()[l.name] = v;
                if (l.init) {
                    place p{make_addr(base_ref::var(v)), l.type, kNoVar};
                    if (l.type->is_aggregate()) {
                        value rv = lower_rvalue(l.init.get());
                        if (!type_equal(rv.type, l.type))
                            throw front_error("aggregate initializer type mismatch", l.loc);
                        inst in;
                        in.k = inst::kind::copy;
                        in.scalar_copy = false;
                        in.nbytes = types_.size_of(l.type);
                        in.dst = p.addr;
                        in.src = rv.e;
                        emit(std::move(in), l.loc);
                    } else {
                        store_scalar(p, lower_rvalue(l.init.get()), l.loc);
                    }
                }
            }
            return;
        }
        case ast_stmt::kind::if_: {
            point_id then_pt = new_point(s->loc), else_pt = new_point(s->loc), join = new_point(s->loc);
            lower_cond(s->e.get(), then_pt, else_pt);
            cur_ = then_pt;
            lower_stmt(s->then_s.get());
            emit_jump(join);
            cur_ = else_pt;
            if (s->else_s) lower_stmt(s->else_s.get());
            emit_jump(join);
            cur_ = join;
            return;
        }
        case ast_stmt::kind::while_: lower_loop(nullptr, s->e.get(), nullptr, s->loop_body.get(), s->loc); return;
        case ast_stmt::kind::for_:
            lower_loop(s->for_init.get(), s->e.get(), s->for_update.get(), s->loop_body.get(), s->loc);
            return;
        case ast_stmt::kind::return_: {
            // by value: lowering the return expression can inline calls and
            // grow frames_, which would invalidate a reference taken here
            fn_frame fr = frames_.back();
            if (s->e) {
                if (fr.ret_type->k == ctype::kind::void_t)
                    throw front_error("returning a value from a void function", s->loc);
                if (fr.ret_type->is_aggregate())
                    throw front_error("aggregate return types are not supported", s->loc);
                value rv = lower_rvalue(s->e.get());
                if (fr.ret_var != kNoVar) {
                    place rp{make_addr(base_ref::var(fr.ret_var)), fr.ret_type, kNoVar};
                    store_scalar(rp, rv, s->loc);
                }
            }
            emit_jump(fr.exit_pt);
            cur_ = new_point(s->loc); // unreachable continuation
            return;
        }
        case ast_stmt::kind::point_marker: {
            point_id p = new_point(s->loc);
            emit_jump(p);
            cur_ = p;
            g_.labels[s->point_label].push_back(p);
            return;
        }
        }
    }

    void lower_loop(const ast_expr* init, const ast_expr* cond, const ast_expr* update,
                    const ast_stmt* body, sloc at) {
        if (init) lower_discard(init);
        uint32_t peel = body_has_copy(body) ? opt_.unroll : 0;
        point_id exit_pt = new_point(at);
        auto emit_iteration = [&](point_id fallthrough_to) {
            // guard pair out of the current head
            point_id body_pt = new_point(at);
            if (cond)
                lower_cond(cond, body_pt, exit_pt);
            else {
                emit_jump(body_pt);
            }
            cur_ = body_pt;
            lower_stmt(body);
            if (update) lower_discard(update);
            if (fallthrough_to != kNoVar) emit_jump(fallthrough_to);
        };
        for (uint32_t i = 0; i < peel; ++i) {
            point_id next_head = new_point(at);
            emit_iteration(next_head);
            cur_ = next_head;
        }
        // widened remainder
        point_id head = new_point(at);
        emit_jump(head);
        cur_ = head;
        emit_iteration(head); // back edge
        cur_ = exit_pt;
    }

    bool body_has_copy(const ast_stmt* s) {
        std::set<std::string> seen;
        return body_has_copy(s, seen);
    }

    // calls count too: they are inlined, so a copy in the callee lands in
    // the loop body
    bool body_has_copy(const ast_stmt* s, std::set<std::string>& seen) {
        if (!s) return false;
        auto expr_has = [&](const ast_expr* e) {
            std::function<bool(const ast_expr*)> w = [&](const ast_expr* x) -> bool {
                if (!x) return false;
                if (x->k == ast_expr::kind::assign) {
                    const ast_expr* l = x->a.get();
                    const ast_expr* r = x->b.get();
                    bool lhs_mem = l->k == ast_expr::kind::deref || l->k == ast_expr::kind::index;
                    bool rhs_load = is_lvalue_expr(r);
                    if (lhs_mem && rhs_load) return true;
                }
                if (x->k == ast_expr::kind::call && x->a && x->a->k == ast_expr::kind::ident &&
                    seen.insert(x->a->name).second) {
                    auto it = funcs_.find(x->a->name);
                    if (it != funcs_.end() && body_has_copy(it->second->body.get(), seen))
                        return true;
                }
                if (w(x->a.get()) || w(x->b.get())) return true;
                for (auto& a : x->args)
                    if (w(a.get())) return true;
                return false;
            };
            return w(e);
        };
        if (expr_has(s->e.get()) || expr_has(s->for_init.get()) || expr_has(s->for_update.get())) return true;
        for (auto& l : s->locals)
            if (expr_has(l.init.get())) return true;
        if (body_has_copy(s->then_s.get(), seen) || body_has_copy(s->else_s.get(), seen) ||
            body_has_copy(s->loop_body.get(), seen))
            return true;
        for (auto& b : s->body)
            if (body_has_copy(b.get(), seen)) return true;
        return false;
    }

    const ast_program& prog_;
    type_table& types_;
    const abi& abi_;
    lower_options opt_;
    cfg g_;
    std::map<std::string, const ast_func*> funcs_;
    std::map<std::string, func_id> func_ids_;
    std::set<std::string> address_taken_;
    std::vector<std::map<std::string, var_id>> scopes_;
    std::vector<size_t> barriers_;
    std::vector<std::string> inline_stack_;
    std::vector<fn_frame> frames_;
    point_id cur_ = 0;
    uint32_t cur_ctx_ = 0;
    uint32_t temp_ctr_ = 0;
};

inline cfg lower_program(const ast_program& prog, type_table& types, lower_options opt = {}) {
    return lowerer(prog, types, opt).lower();
}

} // namespace cellscope
