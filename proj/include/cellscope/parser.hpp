#pragma once

#include <map>

#include "ast.hpp"
#include "lexer.hpp"

namespace cellscope {

// Recursive-descent parser for the analyzed C subset: global scalar/aggregate
// declarations, struct/union declarations (named or inline anonymous),
// functions, if/while/for, the usual expression operators, casts, sizeof,
// and __point(n) markers. No typedef, no switch, no break/continue, no
// initializers on globals (statics are implicitly zero).
class parser {
public:
    parser(std::string src, std::string filename, type_table& types)
        : toks_(lex(src)), types_(types) {
        prog_.file = std::move(filename);
    }

    ast_program parse() {
        while (!at_eof()) top_decl();
        return std::move(prog_);
    }

private:
    const token& cur(size_t d = 0) const { return toks_[std::min(pos_ + d, toks_.size() - 1)]; }
    bool at_eof() const { return cur().k == token::kind::eof; }
    token next() { return toks_[pos_++]; }
    bool accept(const char* s) {
        if (cur().is(s)) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(const char* s) {
        if (!accept(s)) throw front_error(std::string("expected '") + s + "', found '" + cur().text + "'", cur().loc);
    }
    std::string expect_ident() {
        if (cur().k != token::kind::ident)
            throw front_error("expected identifier, found '" + cur().text + "'", cur().loc);
        return next().text;
    }

    // ---- types ----

    bool starts_type() const {
        const token& t = cur();
        if (t.k != token::kind::keyword) return false;
        static const char* heads[] = {"struct", "union", "void", "char", "short", "int", "long",
                                      "unsigned", "signed", "float", "double", "volatile", "static",
                                      "uint8", "uint16", "uint32", "uint64", "int8", "int16", "int32", "int64"};
        for (auto* h : heads)
            if (t.text == h) return true;
        return false;
    }

    struct declspec {
        const ctype* base = nullptr;
        bool is_volatile = false;
    };

    declspec parse_declspec() {
        declspec d;
        bool saw_static = false;
        for (;;) {
            if (accept("volatile")) {
                d.is_volatile = true;
                continue;
            }
            if (accept("static")) {
                saw_static = true;
                continue;
            }
            break;
        }
        (void)saw_static; // file-scope variables are static storage either way
        d.base = parse_base_type();
        while (accept("volatile")) d.is_volatile = true;
        return d;
    }

    const ctype* parse_base_type() {
        sloc at = cur().loc;
        if (cur().is("struct") || cur().is("union")) {
            bool overlay = cur().text == "union";
            next();
            std::string tag;
            if (cur().k == token::kind::ident) tag = next().text;
            if (cur().is("{")) {
                ctype* t = types_.make_aggregate(overlay ? ctype::kind::overlay : ctype::kind::record, tag);
                if (!tag.empty()) {
                    if (tags_.count(tag)) throw front_error("redefinition of tag '" + tag + "'", at);
                    tags_[tag] = t;
                }
                parse_member_list(t);
                types_.finalize(t);
                return t;
            }
            if (tag.empty()) throw front_error("expected tag or member list", at);
            auto it = tags_.find(tag);
            if (it == tags_.end()) throw front_error("unknown tag '" + tag + "'", at);
            return it->second;
        }
        if (accept("void")) return types_.void_type();
        if (accept("float")) return types_.scalar(scalar_type::flt);
        if (accept("double")) return types_.scalar(scalar_type::dbl);
        // fixed-width aliases
        static const std::pair<const char*, scalar_type> alias[] = {
            {"uint8", scalar_type::uchar},   {"uint16", scalar_type::ushort},
            {"uint32", scalar_type::uint},   {"uint64", scalar_type::ullong},
            {"int8", scalar_type::schar},    {"int16", scalar_type::sshort},
            {"int32", scalar_type::sint},    {"int64", scalar_type::sllong},
        };
        for (auto& [kw, st] : alias)
            if (accept(kw)) return types_.scalar(st);
        // signedness + width keywords
        bool saw_unsigned = false, saw_signed = false, saw_any = false;
        int longs = 0;
        bool is_char = false, is_short = false, is_int = false;
        for (;;) {
            if (accept("unsigned")) { saw_unsigned = true; saw_any = true; continue; }
            if (accept("signed")) { saw_signed = true; saw_any = true; continue; }
            if (accept("char")) { is_char = true; saw_any = true; continue; }
            if (accept("short")) { is_short = true; saw_any = true; continue; }
            if (accept("int")) { is_int = true; saw_any = true; continue; }
            if (accept("long")) { ++longs; saw_any = true; continue; }
            break;
        }
        (void)saw_signed;
        (void)is_int;
        if (!saw_any) throw front_error("expected type, found '" + cur().text + "'", at);
        if (longs >= 1 && accept("double")) return types_.scalar(scalar_type::dbl); // long double
        scalar_type st;
        if (is_char)
            st = saw_unsigned ? scalar_type::uchar : scalar_type::schar;
        else if (is_short)
            st = saw_unsigned ? scalar_type::ushort : scalar_type::sshort;
        else if (longs >= 2)
            st = saw_unsigned ? scalar_type::ullong : scalar_type::sllong;
        else if (longs == 1)
            st = saw_unsigned ? scalar_type::ulong : scalar_type::slong;
        else
            st = saw_unsigned ? scalar_type::uint : scalar_type::sint;
        return types_.scalar(st);
    }

    void parse_member_list(ctype* agg) {
        expect("{");
        while (!accept("}")) {
            declspec ds = parse_declspec();
            for (;;) {
                auto [name, ty] = parse_declarator(ds.base);
                if (name.empty()) throw front_error("member needs a name", cur().loc);
                if (types_.find_field(agg, name))
                    throw front_error("duplicate member '" + name + "'", cur().loc);
                agg->fields.push_back({name, ty, 0});
                if (!accept(",")) break;
            }
            expect(";");
        }
    }

    // declarator := '*'* ( Id | '(' '*' Id ')' '(' param-types ')' ) ('[' const ']')*
    std::pair<std::string, const ctype*> parse_declarator(const ctype* base) {
        const ctype* t = base;
        while (accept("*")) t = types_.pointer_to(t);
        std::string name;
        if (cur().is("(") && cur(1).is("*")) {
            // function pointer declarator
            expect("(");
            expect("*");
            name = expect_ident();
            expect(")");
            expect("(");
            std::vector<const ctype*> params;
            if (!cur().is(")")) {
                if (cur().is("void") && cur(1).is(")")) {
                    next();
                } else {
                    for (;;) {
                        declspec ds = parse_declspec();
                        auto [pn, pt] = parse_declarator(ds.base);
                        (void)pn;
                        params.push_back(pt);
                        if (!accept(",")) break;
                    }
                }
            }
            expect(")");
            t = types_.pointer_to(types_.make_func(t, std::move(params)));
            return {name, t};
        }
        if (cur().k == token::kind::ident) name = next().text;
        std::vector<uint32_t> dims;
        while (accept("[")) {
            dims.push_back(parse_array_dim());
            expect("]");
        }
        for (auto it = dims.rbegin(); it != dims.rend(); ++it) t = types_.array_of(t, *it);
        return {name, t};
    }

    uint32_t parse_array_dim() {
        // constant expression: literals, sizeof, + - * /
        ast_expr_ptr e = parse_expr(assign_prec());
        i128 v = const_fold(e.get());
        if (v <= 0 || v > (1 << 24)) throw front_error("bad array size", e->loc);
        return uint32_t(v);
    }

    i128 const_fold(const ast_expr* e) {
        switch (e->k) {
        case ast_expr::kind::int_lit: return e->ival;
        case ast_expr::kind::sizeof_type: return types_.size_of(e->type);
        case ast_expr::kind::binary: {
            i128 a = const_fold(e->a.get()), b = const_fold(e->b.get());
            switch (e->op) {
            case ast_op::add: return a + b;
            case ast_op::sub: return a - b;
            case ast_op::mul: return a * b;
            case ast_op::div:
                if (b == 0) throw front_error("division by zero in constant", e->loc);
                return a / b;
            default: break;
            }
            break;
        }
        case ast_expr::kind::unary:
            if (e->op == ast_op::neg) return -const_fold(e->a.get());
            break;
        default: break;
        }
        throw front_error("expected constant expression", e->loc);
    }

    // ---- top level ----

    void top_decl() {
        sloc at = cur().loc;
        declspec ds = parse_declspec();
        if (accept(";")) return; // bare struct/union declaration
        auto [name, ty] = parse_declarator(ds.base);
        if (name.empty()) throw front_error("declaration needs a name", at);
        if (cur().is("(")) {
            parse_func(name, ty, ds, at);
            return;
        }
        for (;;) {
            if (ty->k == ctype::kind::void_t) throw front_error("variable of type void", at);
            prog_.globals.push_back({name, ty, ds.is_volatile, at});
            if (!accept(",")) break;
            std::tie(name, ty) = parse_declarator(ds.base);
            if (name.empty()) throw front_error("declaration needs a name", cur().loc);
        }
        expect(";");
    }

    void parse_func(std::string name, const ctype* ret, const declspec& ds, sloc at) {
        (void)ds;
        ast_func fn;
        fn.name = std::move(name);
        fn.ret = ret;
        fn.loc = at;
        expect("(");
        if (!cur().is(")")) {
            if (cur().is("void") && cur(1).is(")")) {
                next();
            } else {
                for (;;) {
                    declspec p = parse_declspec();
                    auto [pn, pt] = parse_declarator(p.base);
                    if (pn.empty()) throw front_error("parameter needs a name", cur().loc);
                    if (pt->k == ctype::kind::array) pt = types_.pointer_to(pt->elem); // decay
                    ast_local loc;
                    loc.name = pn;
                    loc.type = pt;
                    loc.is_volatile = p.is_volatile;
                    loc.loc = cur().loc;
                    fn.params.push_back(std::move(loc));
                    if (!accept(",")) break;
                }
            }
        }
        expect(")");
        fn.body = parse_block();
        prog_.funcs.push_back(std::move(fn));
    }

    // ---- statements ----

    ast_stmt_ptr make_stmt(ast_stmt::kind k, sloc at) {
        auto s = std::make_unique<ast_stmt>();
        s->k = k;
        s->loc = at;
        return s;
    }

    ast_stmt_ptr parse_block() {
        sloc at = cur().loc;
        expect("{");
        auto blk = make_stmt(ast_stmt::kind::block, at);
        while (!accept("}")) blk->body.push_back(parse_stmt());
        return blk;
    }

    ast_stmt_ptr parse_stmt() {
        sloc at = cur().loc;
        if (cur().is("{")) return parse_block();
        if (accept(";")) return make_stmt(ast_stmt::kind::empty, at);
        if (accept("if")) {
            auto s = make_stmt(ast_stmt::kind::if_, at);
            expect("(");
            s->e = parse_expr_full();
            expect(")");
            s->then_s = parse_stmt();
            if (accept("else")) s->else_s = parse_stmt();
            return s;
        }
        if (accept("while")) {
            auto s = make_stmt(ast_stmt::kind::while_, at);
            expect("(");
            s->e = parse_expr_full();
            expect(")");
            s->loop_body = parse_stmt();
            return s;
        }
        if (accept("for")) {
            auto s = make_stmt(ast_stmt::kind::for_, at);
            expect("(");
            if (!cur().is(";")) s->for_init = parse_expr_full();
            expect(";");
            if (!cur().is(";")) s->e = parse_expr_full();
            expect(";");
            if (!cur().is(")")) s->for_update = parse_expr_full();
            expect(")");
            s->loop_body = parse_stmt();
            return s;
        }
        if (accept("return")) {
            auto s = make_stmt(ast_stmt::kind::return_, at);
            if (!cur().is(";")) s->e = parse_expr_full();
            expect(";");
            return s;
        }
        if (accept("__point")) {
            auto s = make_stmt(ast_stmt::kind::point_marker, at);
            expect("(");
            if (cur().k != token::kind::int_lit) throw front_error("__point needs an integer label", cur().loc);
            s->point_label = int(int64_t(next().ival));
            expect(")");
            expect(";");
            return s;
        }
        if (starts_type()) {
            auto s = make_stmt(ast_stmt::kind::decl, at);
            declspec ds = parse_declspec();
            for (;;) {
                auto [name, ty] = parse_declarator(ds.base);
                if (name.empty()) throw front_error("declaration needs a name", cur().loc);
                if (ty->k == ctype::kind::void_t) throw front_error("variable of type void", cur().loc);
                ast_local l;
                l.name = name;
                l.type = ty;
                l.is_volatile = ds.is_volatile;
                l.loc = at;
                if (accept("=")) l.init = parse_expr(assign_prec());
                s->locals.push_back(std::move(l));
                if (!accept(",")) break;
            }
            expect(";");
            return s;
        }
        auto s = make_stmt(ast_stmt::kind::expr, at);
        s->e = parse_expr_full();
        expect(";");
        return s;
    }

    // ---- expressions (precedence climbing) ----

    static int assign_prec() { return 2; }

    ast_expr_ptr make_expr(ast_expr::kind k, sloc at) {
        auto e = std::make_unique<ast_expr>();
        e->k = k;
        e->loc = at;
        return e;
    }

    // full expression including comma
    ast_expr_ptr parse_expr_full() {
        auto e = parse_expr(assign_prec());
        while (cur().is(",")) {
            sloc at = next().loc;
            auto c = make_expr(ast_expr::kind::comma, at);
            c->a = std::move(e);
            c->b = parse_expr(assign_prec());
            e = std::move(c);
        }
        return e;
    }

    struct binop_row {
        const char* tok;
        ast_op op;
        int prec;
    };

    static const binop_row* binop_of(const token& t) {
        static const binop_row rows[] = {
            {"||", ast_op::lor, 3},  {"&&", ast_op::land, 4},
            {"|", ast_op::bor, 5},   {"^", ast_op::bxor, 6},  {"&", ast_op::band, 7},
            {"==", ast_op::eq, 8},   {"!=", ast_op::ne, 8},
            {"<", ast_op::lt, 9},    {"<=", ast_op::le, 9},
            {">", ast_op::gt, 9},    {">=", ast_op::ge, 9},
            {"<<", ast_op::shl, 10}, {">>", ast_op::shr, 10},
            {"+", ast_op::add, 11},  {"-", ast_op::sub, 11},
            {"*", ast_op::mul, 12},  {"/", ast_op::div, 12},  {"%", ast_op::mod, 12},
        };
        if (t.k != token::kind::punct) return nullptr;
        for (auto& r : rows)
            if (t.text == r.tok) return &r;
        return nullptr;
    }

    ast_expr_ptr parse_expr(int min_prec) {
        auto lhs = parse_unary();
        // assignment (right associative, lowest precedence handled here)
        if (min_prec <= assign_prec()) {
            static const std::pair<const char*, ast_op> compounds[] = {
                {"+=", ast_op::add}, {"-=", ast_op::sub}, {"*=", ast_op::mul},
                {"/=", ast_op::div}, {"%=", ast_op::mod}, {"&=", ast_op::band},
                {"|=", ast_op::bor}, {"^=", ast_op::bxor}, {"<<=", ast_op::shl},
                {">>=", ast_op::shr},
            };
            if (cur().is("=")) {
                sloc at = next().loc;
                auto e = make_expr(ast_expr::kind::assign, at);
                e->a = std::move(lhs);
                e->b = parse_expr(assign_prec());
                return e;
            }
            for (auto& [tok, op] : compounds) {
                if (cur().is(tok)) {
                    sloc at = next().loc;
                    auto e = make_expr(ast_expr::kind::compound_assign, at);
                    e->op = op;
                    e->a = std::move(lhs);
                    e->b = parse_expr(assign_prec());
                    return e;
                }
            }
        }
        for (;;) {
            const binop_row* row = binop_of(cur());
            if (!row || row->prec < min_prec || row->prec <= assign_prec()) break;
            sloc at = next().loc;
            auto rhs = parse_expr(row->prec + 1);
            auto e = make_expr(ast_expr::kind::binary, at);
            e->op = row->op;
            e->a = std::move(lhs);
            e->b = std::move(rhs);
            lhs = std::move(e);
        }
        return lhs;
    }

    bool at_cast() const {
        // '(' followed by a type head is a cast
        if (!cur().is("(")) return false;
        const token& t = cur(1);
        if (t.k != token::kind::keyword) return false;
        return !(t.text == "sizeof" || t.text == "__point");
    }

    ast_expr_ptr parse_unary() {
        sloc at = cur().loc;
        if (accept("-")) {
            auto e = make_expr(ast_expr::kind::unary, at);
            e->op = ast_op::neg;
            e->a = parse_unary();
            return e;
        }
        if (accept("~")) {
            auto e = make_expr(ast_expr::kind::unary, at);
            e->op = ast_op::bnot;
            e->a = parse_unary();
            return e;
        }
        if (accept("!")) {
            auto e = make_expr(ast_expr::kind::unary, at);
            e->op = ast_op::lnot;
            e->a = parse_unary();
            return e;
        }
        if (accept("*")) {
            auto e = make_expr(ast_expr::kind::deref, at);
            e->a = parse_unary();
            return e;
        }
        if (accept("&")) {
            auto e = make_expr(ast_expr::kind::addr_of, at);
            e->a = parse_unary();
            return e;
        }
        if (accept("++")) {
            auto e = make_expr(ast_expr::kind::pre_inc, at);
            e->a = parse_unary();
            return e;
        }
        if (accept("--")) {
            auto e = make_expr(ast_expr::kind::pre_dec, at);
            e->a = parse_unary();
            return e;
        }
        if (cur().is("sizeof")) {
            next();
            if (at_cast()) {
                expect("(");
                const ctype* t = parse_type_name();
                expect(")");
                auto e = make_expr(ast_expr::kind::sizeof_type, at);
                e->type = t;
                return e;
            }
            auto e = make_expr(ast_expr::kind::sizeof_expr, at);
            e->a = parse_unary();
            return e;
        }
        if (at_cast()) {
            size_t save = pos_;
            expect("(");
            const ctype* t = parse_type_name();
            expect(")");
            (void)save;
            auto e = make_expr(ast_expr::kind::cast, at);
            e->type = t;
            e->a = parse_unary();
            return e;
        }
        return parse_postfix();
    }

    const ctype* parse_type_name() {
        declspec ds = parse_declspec();
        const ctype* t = ds.base;
        while (accept("*")) t = types_.pointer_to(t);
        return t;
    }

    ast_expr_ptr parse_postfix() {
        auto e = parse_primary();
        for (;;) {
            sloc at = cur().loc;
            if (accept("[")) {
                auto ix = make_expr(ast_expr::kind::index, at);
                ix->a = std::move(e);
                ix->b = parse_expr_full();
                expect("]");
                e = std::move(ix);
                continue;
            }
            if (accept(".")) {
                auto m = make_expr(ast_expr::kind::member, at);
                m->a = std::move(e);
                m->name = expect_ident();
                e = std::move(m);
                continue;
            }
            if (accept("->")) {
                auto m = make_expr(ast_expr::kind::arrow, at);
                m->a = std::move(e);
                m->name = expect_ident();
                e = std::move(m);
                continue;
            }
            if (accept("(")) {
                auto c = make_expr(ast_expr::kind::call, at);
                c->a = std::move(e);
                if (!cur().is(")")) {
                    for (;;) {
                        c->args.push_back(parse_expr(assign_prec()));
                        if (!accept(",")) break;
                    }
                }
                expect(")");
                e = std::move(c);
                continue;
            }
            if (accept("++")) {
                auto p = make_expr(ast_expr::kind::post_inc, at);
                p->a = std::move(e);
                e = std::move(p);
                continue;
            }
            if (accept("--")) {
                auto p = make_expr(ast_expr::kind::post_dec, at);
                p->a = std::move(e);
                e = std::move(p);
                continue;
            }
            break;
        }
        return e;
    }

    ast_expr_ptr parse_primary() {
        sloc at = cur().loc;
        if (cur().k == token::kind::int_lit) {
            auto e = make_expr(ast_expr::kind::int_lit, at);
            e->ival = next().ival;
            return e;
        }
        if (cur().k == token::kind::float_lit) {
            auto e = make_expr(ast_expr::kind::float_lit, at);
            e->fval = next().fval;
            return e;
        }
        if (cur().k == token::kind::ident) {
            auto e = make_expr(ast_expr::kind::ident, at);
            e->name = next().text;
            return e;
        }
        if (accept("(")) {
            auto e = parse_expr_full();
            expect(")");
            return e;
        }
        throw front_error("expected expression, found '" + cur().text + "'", at);
    }

    std::vector<token> toks_;
    size_t pos_ = 0;
    type_table& types_;
    std::map<std::string, const ctype*> tags_;
    ast_program prog_;
};

inline ast_program parse_program(const std::string& src, const std::string& filename, type_table& types) {
    return parser(src, filename, types).parse();
}

} // namespace cellscope
