#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <vector>

#include "symmflow/ast.hpp"
#include "symmflow/errors.hpp"

namespace symmflow {

namespace detail {

enum class TokKind { number, ident, jet, op, lparen, rparen, end };

struct Token {
    TokKind kind;
    std::string text;       // ident / op
    Rational value;         // number
    JetVar jet;             // jet
    std::size_t pos = 0;
};

inline int jet_family_of(const std::string& name) {
    if (name == "y") return 0;
    if (name == "y0") return 1;
    if (name == "y1") return 2;
    return -1;
}

class Lexer {
public:
    explicit Lexer(const std::string& text) : s_(text) { tokenize(); }
    const std::vector<Token>& tokens() const { return toks_; }

private:
    void tokenize() {
        std::size_t i = 0;
        while (i < s_.size()) {
            char c = s_[i];
            if (std::isspace(static_cast<unsigned char>(c))) {
                ++i;
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                toks_.push_back(lex_number(i));
                continue;
            }
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                toks_.push_back(lex_ident(i));
                continue;
            }
            if (c == '(') {
                toks_.push_back({TokKind::lparen, "(", {}, {}, i++});
                continue;
            }
            if (c == ')') {
                toks_.push_back({TokKind::rparen, ")", {}, {}, i++});
                continue;
            }
            if (std::string("+-*/^").find(c) != std::string::npos) {
                toks_.push_back({TokKind::op, std::string(1, c), {}, {}, i++});
                continue;
            }
            throw ParseError(std::string("unexpected character '") + c + "'", i);
        }
        toks_.push_back({TokKind::end, "", {}, {}, s_.size()});
    }

    Token lex_number(std::size_t& i) {
        std::size_t start = i;
        std::string digits, frac;
        while (i < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i])))
            digits += s_[i++];
        if (i < s_.size() && s_[i] == '.') {
            ++i;
            while (i < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i])))
                frac += s_[i++];
        }
        if (digits.empty() && frac.empty())
            throw ParseError("malformed number", start);
        // decimal literals are exact: 1.25 -> 125/100
        Rational v = Rational::from_string(digits.empty() ? "0" : digits);
        if (!frac.empty()) {
            Rational scale = Rational(1);
            for (std::size_t k = 0; k < frac.size(); ++k) scale = scale * Rational(10);
            v = v + Rational::from_string(frac) / scale;
        }
        return {TokKind::number, s_.substr(start, i - start), v, {}, start};
    }

    Token lex_ident(std::size_t& i) {
        std::size_t start = i;
        std::string name;
        while (i < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[i])) || s_[i] == '_'))
            name += s_[i++];
        int family = jet_family_of(name);
        if (family >= 0) {
            int order = 0;
            while (i < s_.size() && s_[i] == '\'') {
                ++order;
                ++i;
            }
            return {TokKind::jet, name, {}, {family, order}, start};
        }
        if (i < s_.size() && s_[i] == '\'')
            throw ParseError("prime on non-dependent identifier '" + name + "'", i);
        return {TokKind::ident, name, {}, {}, start};
    }

    std::string s_;
    std::vector<Token> toks_;
};

class Parser {
public:
    explicit Parser(const std::string& text) : lex_(text) {}

    Ast parse() {
        Ast e = parse_expr(0);
        const Token& t = peek();
        if (t.kind != TokKind::end) throw ParseError("unexpected token '" + t.text + "'", t.pos);
        return e;
    }

private:
    // precedence: + - (10), * / (20), unary (25), ^ (30, right assoc)
    Ast parse_expr(int min_prec) {
        Ast lhs = parse_prefix();
        for (;;) {
            const Token& t = peek();
            if (t.kind != TokKind::op) break;
            int prec = t.text == "+" || t.text == "-" ? 10
                       : t.text == "*" || t.text == "/" ? 20
                                                         : 30;
            if (prec < min_prec) break;
            std::string op = t.text;
            advance();
            Ast rhs = parse_expr(op == "^" ? prec : prec + 1);
            if (op == "+")
                lhs = ast::add(lhs, rhs);
            else if (op == "-")
                lhs = ast::sub(lhs, rhs);
            else if (op == "*")
                lhs = ast::mul(lhs, rhs);
            else if (op == "/")
                lhs = ast::div(lhs, rhs);
            else
                lhs = ast::pow(lhs, rhs);
        }
        return lhs;
    }

    Ast parse_prefix() {
        const Token& t = peek();
        if (t.kind == TokKind::op && (t.text == "-" || t.text == "+")) {
            bool negate = t.text == "-";
            advance();
            Ast e = parse_expr(25);
            return negate ? ast::neg(e) : e;
        }
        return parse_primary();
    }

    Ast parse_primary() {
        const Token& t = peek();
        switch (t.kind) {
            case TokKind::number: {
                advance();
                return ast::num(t.value);
            }
            case TokKind::lparen: {
                advance();
                Ast e = parse_expr(0);
                expect_rparen();
                return e;
            }
            case TokKind::jet: {
                JetVar v = t.jet;
                advance();
                // y^(k) names the k-th jet; only for the underived symbol
                if (v.order == 0) {
                    if (auto order = try_paren_jet_order()) v.order = *order;
                }
                return ast::jet(v.family, v.order);
            }
            case TokKind::ident: {
                std::string name = t.text;
                advance();
                if (name == "eps") return ast::eps();
                if (name == "sin" || name == "cos" || name == "sqrt") {
                    const Token& nt = peek();
                    if (nt.kind != TokKind::lparen)
                        throw ParseError("expected '(' after function '" + name + "'", nt.pos);
                    advance();
                    Ast arg = parse_expr(0);
                    expect_rparen();
                    if (name == "sin") return ast::sin(arg);
                    if (name == "cos") return ast::cos(arg);
                    return ast::sqrt(arg);
                }
                return ast::var(name);
            }
            default:
                throw ParseError("expected expression, found '" +
                                     (t.kind == TokKind::end ? std::string("end of input") : t.text) + "'",
                                 t.pos);
        }
    }

    // matches ^( INTEGER ) immediately after a bare dependent symbol
    std::optional<int> try_paren_jet_order() {
        const auto& toks = lex_.tokens();
        if (pos_ + 3 >= toks.size()) return std::nullopt;
        if (!(toks[pos_].kind == TokKind::op && toks[pos_].text == "^")) return std::nullopt;
        if (toks[pos_ + 1].kind != TokKind::lparen) return std::nullopt;
        if (toks[pos_ + 2].kind != TokKind::number || !toks[pos_ + 2].value.is_integer())
            return std::nullopt;
        if (toks[pos_ + 3].kind != TokKind::rparen) return std::nullopt;
        auto k = toks[pos_ + 2].value.as_long();
        if (!k || *k < 0) return std::nullopt;
        pos_ += 4;
        return static_cast<int>(*k);
    }

    const Token& peek() const { return lex_.tokens()[pos_]; }
    void advance() { ++pos_; }
    void expect_rparen() {
        const Token& t = peek();
        if (t.kind != TokKind::rparen) throw ParseError("expected ')'", t.pos);
        advance();
    }

    Lexer lex_;
    std::size_t pos_ = 0;
};

}  // namespace detail

/// Parse expression text into a tree. Throws ParseError with a byte position.
inline Ast parse(const std::string& text) { return detail::Parser(text).parse(); }

}  // namespace symmflow
