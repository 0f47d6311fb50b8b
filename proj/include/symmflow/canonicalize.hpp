#pragma once

#include <map>
#include <set>
#include <string>

#include "symmflow/ast.hpp"
#include "symmflow/canon.hpp"
#include "symmflow/errors.hpp"
#include "symmflow/parse.hpp"

namespace symmflow {

/// Context for lowering a tree into the canonical fragment: parameter
/// bindings are substituted by exact rationals, declared unknowns become
/// affine coefficient symbols.
struct CanonOptions {
    std::map<std::string, Rational> bindings;
    std::set<std::string> unknowns;
};

namespace detail {

inline CanonExpr canonicalize_impl(const Ast& e, const CanonOptions& opt) {
    switch (e->kind) {
        case AstKind::num: return CanonExpr::constant(e->value);
        case AstKind::var: {
            if (e->name == "x" || e->name == "z") return CanonExpr::x();
            auto it = opt.bindings.find(e->name);
            if (it != opt.bindings.end()) return CanonExpr::constant(it->second);
            if (opt.unknowns.count(e->name)) return CanonExpr::unknown(e->name);
            throw NotCanonical("unknown identifier '" + e->name + "'");
        }
        case AstKind::jet: return CanonExpr::jet(e->jet.family, e->jet.order);
        case AstKind::eps: return CanonExpr::eps();
        case AstKind::add:
            return canonicalize_impl(e->a, opt).add(canonicalize_impl(e->b, opt));
        case AstKind::sub:
            return canonicalize_impl(e->a, opt).sub(canonicalize_impl(e->b, opt));
        case AstKind::mul:
            return canonicalize_impl(e->a, opt).mul(canonicalize_impl(e->b, opt));
        case AstKind::neg: return canonicalize_impl(e->a, opt).neg();
        case AstKind::div: {
            CanonExpr den = canonicalize_impl(e->b, opt);
            const auto& terms = den.terms();
            if (terms.size() != 1 || !(terms.begin()->first == TermKey{}) ||
                !terms.begin()->second.is_constant())
                throw NotCanonical("division by non-constant: " + ast_str(e->b));
            Rational d = terms.begin()->second.constant();
            if (d.is_zero()) throw NotCanonical("division by zero: " + ast_str(e));
            return canonicalize_impl(e->a, opt).scale(d.inverse());
        }
        case AstKind::pow: {
            CanonExpr ex = canonicalize_impl(e->b, opt);
            const auto& terms = ex.terms();
            bool scalar = terms.empty() ||
                          (terms.size() == 1 && terms.begin()->first == TermKey{} &&
                           terms.begin()->second.is_constant());
            if (!scalar) throw NotCanonical("non-constant exponent: " + ast_str(e->b));
            Rational k = terms.empty() ? Rational(0) : terms.begin()->second.constant();
            auto ki = k.as_long();
            if (!ki) throw NotCanonical("non-integer exponent: " + ast_str(e));
            CanonExpr base = canonicalize_impl(e->a, opt);
            if (*ki >= 0) return base.pow(static_cast<int>(*ki));
            const auto& bt = base.terms();
            if (bt.size() == 1 && bt.begin()->first == TermKey{} &&
                bt.begin()->second.is_constant())
                return CanonExpr::constant(bt.begin()->second.constant().pow(*ki));
            throw NotCanonical("negative power of non-constant: " + ast_str(e));
        }
        case AstKind::sin:
        case AstKind::cos: {
            CanonExpr arg = canonicalize_impl(e->a, opt);
            if (arg.is_zero())
                return e->kind == AstKind::sin ? CanonExpr::zero() : CanonExpr::one();
            const auto& terms = arg.terms();
            TermKey xk;
            xk.xpow = 1;
            if (terms.size() != 1 || !(terms.begin()->first == xk) ||
                !terms.begin()->second.is_constant())
                throw NotCanonical("trig argument is not an integer multiple of x: " +
                                   ast_str(e->a));
            auto m = terms.begin()->second.constant().as_long();
            if (!m || *m == 0)
                throw NotCanonical("trig frequency is not a nonzero integer: " + ast_str(e->a));
            int freq = static_cast<int>(*m < 0 ? -*m : *m);
            if (e->kind == AstKind::cos) return CanonExpr::cos(freq);
            CanonExpr s = CanonExpr::sin(freq);
            return *m < 0 ? s.neg() : s;
        }
        case AstKind::sqrt: {
            CanonExpr arg = canonicalize_impl(e->a, opt);
            if (arg.is_zero()) return CanonExpr::zero();
            const auto& terms = arg.terms();
            if (terms.size() != 1 || !(terms.begin()->first == TermKey{}) ||
                !terms.begin()->second.is_constant())
                throw NotCanonical("sqrt of non-constant: " + ast_str(e->a));
            auto root = terms.begin()->second.constant().sqrt_exact();
            if (!root) throw NotCanonical("sqrt of non-square rational: " + ast_str(e));
            return CanonExpr::constant(*root);
        }
    }
    throw Error("unreachable ast kind");
}

}  // namespace detail

inline CanonExpr canonicalize(const Ast& e, const CanonOptions& opt = {}) {
    return detail::canonicalize_impl(e, opt);
}

inline CanonExpr parse_canonical(const std::string& text, const CanonOptions& opt = {}) {
    return canonicalize(parse(text), opt);
}

/// Lift a canonical expression back into a tree (unknown coefficients become
/// named variables). Inverse of canonicalize up to formatting.
inline Ast to_ast(const CanonExpr& e) {
    using namespace ast;
    if (e.is_zero()) return num(0);
    Ast sum;
    for (const auto& [k, c] : e.terms()) {
        Ast coeff;
        if (c.is_constant()) {
            coeff = num(c.constant());
        } else {
            coeff = c.constant().is_zero() ? nullptr : num(c.constant());
            for (const auto& [n, r] : c.terms()) {
                Ast piece = r.is_one() ? var(n) : mul(num(r), var(n));
                coeff = coeff ? add(coeff, piece) : piece;
            }
        }
        bool unit = c.is_constant() && c.constant().is_one() && !(k == TermKey{});
        Ast term = unit ? nullptr : coeff;
        auto append = [&term](Ast f) { term = term ? mul(term, std::move(f)) : std::move(f); };
        if (k.xpow == 1) append(var("x"));
        if (k.xpow > 1) append(pow(var("x"), num(k.xpow)));
        if (k.trig.kind != TrigKind::none) {
            Ast arg = k.trig.freq == 1 ? var("x") : mul(num(k.trig.freq), var("x"));
            append(k.trig.kind == TrigKind::sin ? ast::sin(arg) : ast::cos(arg));
        }
        for (const auto& [v, ex] : k.jet) {
            Ast j = jet(v.family, v.order);
            append(ex == 1 ? j : pow(j, num(ex)));
        }
        if (k.epspow == 1) append(eps());
        sum = sum ? add(sum, term) : term;
    }
    return sum;
}

}  // namespace symmflow
