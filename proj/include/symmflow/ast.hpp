#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <string>

#include "symmflow/canon.hpp"
#include "symmflow/errors.hpp"
#include "symmflow/rational.hpp"

namespace symmflow {

enum class AstKind {
    num,   // exact rational literal
    var,   // named variable or constant (x, z, c, C1, ...)
    jet,   // dependent-variable jet
    eps,
    add,
    sub,
    mul,
    div,
    neg,
    pow,
    sin,
    cos,
    sqrt
};

struct AstNode;
using Ast = std::shared_ptr<const AstNode>;

/// Immutable expression tree; the general carrier for formulas that may lie
/// outside the canonical fragment (irrational frequencies, fractional powers).
struct AstNode {
    AstKind kind;
    Rational value;     // num
    std::string name;   // var
    JetVar jet;         // jet
    Ast a, b;           // children

    AstNode(AstKind k) : kind(k) {}
};

namespace ast {

inline Ast num(Rational r) {
    auto n = std::make_shared<AstNode>(AstKind::num);
    n->value = std::move(r);
    return n;
}
inline Ast num(long v) { return num(Rational(v)); }
inline Ast var(std::string name) {
    auto n = std::make_shared<AstNode>(AstKind::var);
    n->name = std::move(name);
    return n;
}
inline Ast jet(int family, int order) {
    auto n = std::make_shared<AstNode>(AstKind::jet);
    n->jet = {family, order};
    return n;
}
inline Ast eps() { return std::make_shared<AstNode>(AstKind::eps); }
inline Ast binary(AstKind k, Ast a, Ast b) {
    auto n = std::make_shared<AstNode>(k);
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}
inline Ast add(Ast a, Ast b) { return binary(AstKind::add, std::move(a), std::move(b)); }
inline Ast sub(Ast a, Ast b) { return binary(AstKind::sub, std::move(a), std::move(b)); }
inline Ast mul(Ast a, Ast b) { return binary(AstKind::mul, std::move(a), std::move(b)); }
inline Ast div(Ast a, Ast b) { return binary(AstKind::div, std::move(a), std::move(b)); }
inline Ast pow(Ast a, Ast b) { return binary(AstKind::pow, std::move(a), std::move(b)); }
inline Ast unary(AstKind k, Ast a) {
    auto n = std::make_shared<AstNode>(k);
    n->a = std::move(a);
    return n;
}
inline Ast neg(Ast a) { return unary(AstKind::neg, std::move(a)); }
inline Ast sin(Ast a) { return unary(AstKind::sin, std::move(a)); }
inline Ast cos(Ast a) { return unary(AstKind::cos, std::move(a)); }
inline Ast sqrt(Ast a) { return unary(AstKind::sqrt, std::move(a)); }

}  // namespace ast

/// Variables are looked up by printed name ("x", "z", "c", "C1", "y'", ...).
using AstEnv = std::map<std::string, double>;

inline double ast_eval(const Ast& e, const AstEnv& env) {
    switch (e->kind) {
        case AstKind::num: return e->value.to_double();
        case AstKind::var: {
            auto it = env.find(e->name);
            if (it == env.end()) throw EvalError("no value for '" + e->name + "'");
            return it->second;
        }
        case AstKind::jet: {
            auto it = env.find(jet_name(e->jet));
            if (it == env.end()) throw EvalError("no value for '" + jet_name(e->jet) + "'");
            return it->second;
        }
        case AstKind::eps: {
            auto it = env.find("eps");
            if (it == env.end()) throw EvalError("no value for 'eps'");
            return it->second;
        }
        case AstKind::add: return ast_eval(e->a, env) + ast_eval(e->b, env);
        case AstKind::sub: return ast_eval(e->a, env) - ast_eval(e->b, env);
        case AstKind::mul: return ast_eval(e->a, env) * ast_eval(e->b, env);
        case AstKind::div: {
            double d = ast_eval(e->b, env);
            if (d == 0.0) throw EvalError("division by zero");
            return ast_eval(e->a, env) / d;
        }
        case AstKind::neg: return -ast_eval(e->a, env);
        case AstKind::pow: return std::pow(ast_eval(e->a, env), ast_eval(e->b, env));
        case AstKind::sin: return std::sin(ast_eval(e->a, env));
        case AstKind::cos: return std::cos(ast_eval(e->a, env));
        case AstKind::sqrt: {
            double v = ast_eval(e->a, env);
            if (v < 0.0) throw EvalError("sqrt of negative value");
            return std::sqrt(v);
        }
    }
    throw Error("unreachable ast kind");
}

inline bool ast_is_constant(const Ast& e, const std::string& indep) {
    switch (e->kind) {
        case AstKind::num: return true;
        case AstKind::var: return e->name != indep && e->name != "x" && e->name != "z";
        case AstKind::jet:
        case AstKind::eps: return false;
        case AstKind::neg:
        case AstKind::sin:
        case AstKind::cos:
        case AstKind::sqrt: return ast_is_constant(e->a, indep);
        default: return ast_is_constant(e->a, indep) && ast_is_constant(e->b, indep);
    }
}

/// d/dx. Both "x" and "z" name the independent variable; other vars are
/// treated as constants. Exponents must be constant subtrees.
inline Ast ast_derivative(const Ast& e) {
    using namespace ast;
    switch (e->kind) {
        case AstKind::num: return num(0);
        case AstKind::var:
            return (e->name == "x" || e->name == "z") ? num(1) : num(0);
        case AstKind::jet: return jet(e->jet.family, e->jet.order + 1);
        case AstKind::eps: return num(0);
        case AstKind::add: return add(ast_derivative(e->a), ast_derivative(e->b));
        case AstKind::sub: return sub(ast_derivative(e->a), ast_derivative(e->b));
        case AstKind::mul:
            return add(mul(ast_derivative(e->a), e->b), mul(e->a, ast_derivative(e->b)));
        case AstKind::div:
            return div(sub(mul(ast_derivative(e->a), e->b), mul(e->a, ast_derivative(e->b))),
                       mul(e->b, e->b));
        case AstKind::neg: return neg(ast_derivative(e->a));
        case AstKind::pow: {
            if (!ast_is_constant(e->b, "x"))
                throw Error("derivative of power with non-constant exponent");
            // d(a^c) = c * a^(c-1) * a'
            return mul(mul(e->b, pow(e->a, sub(e->b, num(1)))), ast_derivative(e->a));
        }
        case AstKind::sin: return mul(cos(e->a), ast_derivative(e->a));
        case AstKind::cos: return neg(mul(sin(e->a), ast_derivative(e->a)));
        case AstKind::sqrt:
            return div(ast_derivative(e->a), mul(num(2), sqrt(e->a)));
    }
    throw Error("unreachable ast kind");
}

namespace detail {

inline int ast_precedence(AstKind k) {
    switch (k) {
        case AstKind::add:
        case AstKind::sub: return 1;
        case AstKind::mul:
        case AstKind::div: return 2;
        case AstKind::neg: return 3;
        case AstKind::pow: return 4;
        default: return 5;
    }
}

}  // namespace detail

inline std::string ast_str(const Ast& e) {
    auto wrap = [](const Ast& child, int outer_prec, bool strict) {
        std::string s = ast_str(child);
        int p = detail::ast_precedence(child->kind);
        if (p < outer_prec || (strict && p == outer_prec)) return "(" + s + ")";
        return s;
    };
    switch (e->kind) {
        case AstKind::num:
            return e->value.is_negative() ? "(" + e->value.str() + ")" : e->value.str();
        case AstKind::var: return e->name;
        case AstKind::jet: return jet_name(e->jet);
        case AstKind::eps: return "eps";
        case AstKind::add: return wrap(e->a, 1, false) + " + " + wrap(e->b, 1, false);
        case AstKind::sub: return wrap(e->a, 1, false) + " - " + wrap(e->b, 1, true);
        case AstKind::mul: return wrap(e->a, 2, false) + "*" + wrap(e->b, 2, false);
        case AstKind::div: return wrap(e->a, 2, false) + "/" + wrap(e->b, 2, true);
        case AstKind::neg: return "-" + wrap(e->a, 3, true);
        case AstKind::pow: return wrap(e->a, 4, true) + "^" + wrap(e->b, 4, true);
        case AstKind::sin: return "sin(" + ast_str(e->a) + ")";
        case AstKind::cos: return "cos(" + ast_str(e->a) + ")";
        case AstKind::sqrt: return "sqrt(" + ast_str(e->a) + ")";
    }
    throw Error("unreachable ast kind");
}

}  // namespace symmflow
