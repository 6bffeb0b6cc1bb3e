#pragma once

#include <cctype>
#include <cstring>
#include <string>
#include <vector>

#include "common.hpp"

namespace cellscope {

struct token {
    enum class kind : uint8_t { ident, keyword, int_lit, float_lit, punct, eof };
    kind k;
    std::string text;
    i128 ival = 0;
    double fval = 0;
    sloc loc;

    bool is(const char* s) const {
        return (k == kind::punct || k == kind::keyword) && text == s;
    }
};

inline bool is_keyword_str(const std::string& s) {
    static const char* kws[] = {
        "struct", "union", "if", "else", "while", "for", "return", "sizeof",
        "volatile", "static", "void", "char", "short", "int", "long",
        "unsigned", "signed", "float", "double",
        "uint8", "uint16", "uint32", "uint64", "int8", "int16", "int32", "int64",
        "__point",
    };
    for (auto* k : kws)
        if (s == k) return true;
    return false;
}

inline std::vector<token> lex(const std::string& src) {
    std::vector<token> out;
    int line = 1, col = 1;
    size_t i = 0;
    auto peek = [&](size_t d = 0) { return i + d < src.size() ? src[i + d] : '\0'; };
    auto advance = [&]() {
        char c = src[i++];
        if (c == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
        return c;
    };
    while (i < src.size()) {
        char c = peek();
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance();
            continue;
        }
        if (c == '/' && peek(1) == '/') {
            while (i < src.size() && peek() != '\n') advance();
            continue;
        }
        if (c == '/' && peek(1) == '*') {
            advance();
            advance();
            while (i < src.size() && !(peek() == '*' && peek(1) == '/')) advance();
            if (i + 1 >= src.size()) throw front_error("unterminated comment", {line, col});
            advance();
            advance();
            continue;
        }
        token t;
        t.loc = {line, col};
        if (std::isalpha((unsigned char)c) || c == '_') {
            std::string s;
            while (std::isalnum((unsigned char)peek()) || peek() == '_') s.push_back(advance());
            t.k = is_keyword_str(s) ? token::kind::keyword : token::kind::ident;
            t.text = std::move(s);
            out.push_back(std::move(t));
            continue;
        }
        if (std::isdigit((unsigned char)c) || (c == '.' && std::isdigit((unsigned char)peek(1)))) {
            std::string s;
            bool isfloat = false;
            if (c == '0' && (peek(1) == 'x' || peek(1) == 'X')) {
                s.push_back(advance());
                s.push_back(advance());
                while (std::isxdigit((unsigned char)peek())) s.push_back(advance());
                t.ival = i128(std::stoull(s, nullptr, 16));
            } else {
                while (std::isdigit((unsigned char)peek())) s.push_back(advance());
                if (peek() == '.' || peek() == 'e' || peek() == 'E') {
                    isfloat = true;
                    if (peek() == '.') {
                        s.push_back(advance());
                        while (std::isdigit((unsigned char)peek())) s.push_back(advance());
                    }
                    if (peek() == 'e' || peek() == 'E') {
                        s.push_back(advance());
                        if (peek() == '+' || peek() == '-') s.push_back(advance());
                        while (std::isdigit((unsigned char)peek())) s.push_back(advance());
                    }
                    t.fval = std::stod(s);
                } else {
                    t.ival = i128(std::stoull(s));
                }
            }
            while (peek() == 'u' || peek() == 'U' || peek() == 'l' || peek() == 'L' ||
                   ((peek() == 'f' || peek() == 'F') && isfloat))
                advance(); // suffixes carry no meaning here
            t.k = isfloat ? token::kind::float_lit : token::kind::int_lit;
            t.text = s;
            out.push_back(std::move(t));
            continue;
        }
        // punctuation, longest match first
        static const char* puncts[] = {
            "<<=", ">>=", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=",
            "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
            "+", "-", "*", "/", "%", "=", "<", ">", "!", "~", "&", "|", "^",
            "(", ")", "{", "}", "[", "]", ";", ",", ".", "?", ":",
        };
        bool matched = false;
        for (auto* p : puncts) {
            size_t n = std::strlen(p);
            if (src.compare(i, n, p) == 0) {
                t.k = token::kind::punct;
                t.text = p;
                for (size_t k = 0; k < n; ++k) advance();
                out.push_back(std::move(t));
                matched = true;
                break;
            }
        }
        if (!matched) throw front_error(std::string("stray character '") + c + "'", {line, col});
    }
    token eof;
    eof.k = token::kind::eof;
    eof.loc = {line, col};
    out.push_back(std::move(eof));
    return out;
}

} // namespace cellscope
