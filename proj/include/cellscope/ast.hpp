#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ctypes.hpp"

namespace cellscope {

// Parsed surface syntax. Types are resolved during parsing (the grammar is
// declaration-order), expression typing happens during lowering.

struct ast_expr;
using ast_expr_ptr = std::unique_ptr<ast_expr>;

enum class ast_op : uint8_t {
    add, sub, mul, div, mod,
    shl, shr, band, bor, bxor,
    eq, ne, lt, le, gt, ge,
    land, lor,
    neg, bnot, lnot,
};

struct ast_expr {
    enum class kind : uint8_t {
        int_lit, float_lit, ident,
        unary, binary, assign, compound_assign,
        cast, deref, addr_of, index, member, arrow,
        call, sizeof_type, sizeof_expr, comma,
        pre_inc, pre_dec, post_inc, post_dec,
    };
    kind k;
    sloc loc;

    i128 ival = 0;               // int_lit
    double fval = 0;             // float_lit
    std::string name;            // ident, member/arrow field, call callee fallback
    ast_op op = ast_op::add;     // unary/binary/compound_assign
    const ctype* type = nullptr; // cast, sizeof_type
    ast_expr_ptr a, b;           // operands
    std::vector<ast_expr_ptr> args; // call
};

struct ast_stmt;
using ast_stmt_ptr = std::unique_ptr<ast_stmt>;

struct ast_local {
    std::string name;
    const ctype* type = nullptr;
    bool is_volatile = false;
    ast_expr_ptr init; // may be null
    sloc loc;
};

struct ast_stmt {
    enum class kind : uint8_t {
        empty, expr, block, if_, while_, for_, return_, decl, point_marker,
    };
    kind k;
    sloc loc;

    ast_expr_ptr e;                    // expr, if/while condition, return value
    std::vector<ast_stmt_ptr> body;    // block
    ast_stmt_ptr then_s, else_s;       // if_
    ast_stmt_ptr loop_body;            // while_/for_
    ast_expr_ptr for_init, for_update; // for_ clauses (comma chains allowed)
    std::vector<ast_local> locals;     // decl
    int point_label = 0;               // point_marker
};

struct ast_global {
    std::string name;
    const ctype* type = nullptr;
    bool is_volatile = false;
    sloc loc;
};

struct ast_func {
    std::string name;
    const ctype* ret = nullptr;
    std::vector<ast_local> params;
    ast_stmt_ptr body;
    sloc loc;
};

struct ast_program {
    std::vector<ast_global> globals;
    std::vector<ast_func> funcs;
    std::string file;
};

} // namespace cellscope
