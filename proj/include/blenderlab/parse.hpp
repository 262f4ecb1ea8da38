#pragma once

// Hand-writable polynomial input, monomial sums over z and w with complex
// literals. Grammar (EBNF):
//
//   expr    = term { ("+" | "-") term } ;
//   term    = unary { ["*"] unary } ;          (* juxtaposition multiplies *)
//   unary   = ("+" | "-") unary | factor ;
//   factor  = primary [ "^" integer ] ;
//   primary = number [ "i" ] | "i" | "z" | "w" | "(" expr ")" ;
//
// Examples: "w^7", "w^2 - 1", "z + (0.25+0.25i)", "0.5*z*w^3".

#include "blenderlab/poly.hpp"

namespace blenderlab {

namespace parse_detail {

struct Token {
    enum class Kind { number, ident, op, end } kind = Kind::end;
    double value = 0.0;
    char text = 0;
};

class Lexer {
  public:
    explicit Lexer(const std::string& s) : s_(s) {}
    Token next() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (pos_ >= s_.size()) return {};
        char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            double v = std::stod(s_.substr(pos_), &used);
            pos_ += used;
            Token t;
            t.kind = Token::Kind::number;
            t.value = v;
            return t;
        }
        if (c == 'i' || c == 'z' || c == 'w') {
            ++pos_;
            Token t;
            t.kind = Token::Kind::ident;
            t.text = c;
            return t;
        }
        if (c == '+' || c == '-' || c == '*' || c == '^' || c == '(' || c == ')') {
            ++pos_;
            Token t;
            t.kind = Token::Kind::op;
            t.text = c;
            return t;
        }
        throw Error(std::string("polynomial parse: unexpected character '") + c + "'");
    }

  private:
    const std::string& s_;
    std::size_t pos_ = 0;
};

class Parser {
  public:
    explicit Parser(const std::string& s) : lex_(s) { advance(); }

    BivariatePolynomial parse() {
        BivariatePolynomial p = expr();
        if (cur_.kind != Token::Kind::end) throw Error("polynomial parse: trailing input");
        return p;
    }

  private:
    Lexer lex_;
    Token cur_;

    void advance() { cur_ = lex_.next(); }
    bool is_op(char c) const { return cur_.kind == Token::Kind::op && cur_.text == c; }

    BivariatePolynomial expr() {
        BivariatePolynomial acc = term();
        while (is_op('+') || is_op('-')) {
            char op = cur_.text;
            advance();
            BivariatePolynomial rhs = term();
            acc = (op == '+') ? acc + rhs : acc - rhs;
        }
        return acc;
    }
    BivariatePolynomial term() {
        BivariatePolynomial acc = unary();
        for (;;) {
            if (is_op('*')) {
                advance();
                acc = acc * unary();
            } else if (cur_.kind == Token::Kind::number || cur_.kind == Token::Kind::ident ||
                       is_op('(')) {
                acc = acc * unary();
            } else {
                break;
            }
        }
        return acc;
    }
    BivariatePolynomial unary() {
        if (is_op('-')) {
            advance();
            return unary() * cplx(-1.0);
        }
        if (is_op('+')) {
            advance();
            return unary();
        }
        return factor();
    }
    BivariatePolynomial factor() {
        BivariatePolynomial base = primary();
        if (is_op('^')) {
            advance();
            if (cur_.kind != Token::Kind::number || cur_.value != std::floor(cur_.value) ||
                cur_.value < 0 || cur_.value > 512)
                throw Error("polynomial parse: exponent must be an integer in [0, 512]");
            int e = int(cur_.value);
            advance();
            BivariatePolynomial acc = BivariatePolynomial::constant(1.0);
            for (int k = 0; k < e; ++k) acc = acc * base;
            return acc;
        }
        return base;
    }
    BivariatePolynomial primary() {
        if (cur_.kind == Token::Kind::number) {
            double v = cur_.value;
            advance();
            if (cur_.kind == Token::Kind::ident && cur_.text == 'i') {
                advance();
                return BivariatePolynomial::constant(cplx(0.0, v));
            }
            return BivariatePolynomial::constant(cplx(v));
        }
        if (cur_.kind == Token::Kind::ident) {
            char c = cur_.text;
            advance();
            if (c == 'i') return BivariatePolynomial::constant(cplx(0.0, 1.0));
            if (c == 'z') return BivariatePolynomial::monomial(1, 0);
            return BivariatePolynomial::monomial(0, 1);
        }
        if (is_op('(')) {
            advance();
            BivariatePolynomial inner = expr();
            if (!is_op(')')) throw Error("polynomial parse: missing ')'");
            advance();
            return inner;
        }
        throw Error("polynomial parse: unexpected token");
    }
};

}  // namespace parse_detail

inline BivariatePolynomial parse_bivariate(const std::string& s) {
    return parse_detail::Parser(s).parse();
}

// one-variable input in z or w; the unused variable must not occur
inline Polynomial parse_polynomial(const std::string& s) {
    BivariatePolynomial p = parse_bivariate(s);
    if (p.deg_z() > 0 && p.deg_w() > 0)
        throw Error("expected a one-variable polynomial, found both z and w");
    if (p.deg_z() > 0) {
        std::vector<cplx> c;
        for (const auto& row : p.table()) c.push_back(row[0]);
        return Polynomial(std::move(c));
    }
    return Polynomial(p.table()[0]);
}

inline cplx parse_complex(const std::string& s) {
    BivariatePolynomial p = parse_bivariate(s);
    if (p.deg_z() > 0 || p.deg_w() > 0) throw Error("expected a complex constant");
    return p.table()[0][0];
}

}  // namespace blenderlab
