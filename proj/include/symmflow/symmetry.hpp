#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "symmflow/canon.hpp"
#include "symmflow/errors.hpp"
#include "symmflow/linsolve.hpp"
#include "symmflow/ode.hpp"

namespace symmflow {

/// eps-graded point symmetry generator
///   X = (xi0 + eps*xi1) d/dx + (eta0 + eps*eta1) d/dy
/// with components in (x, y) only; the grading lives in the field position.
struct PointGenerator {
    CanonExpr xi0, eta0, xi1, eta1;

    bool has_exact_part() const { return !xi0.is_zero() || !eta0.is_zero(); }
    bool operator==(const PointGenerator&) const = default;
};

/// Evolutionary (characteristic) generator  (zeta0 + eps*zeta1) d/dy.
struct EvolutionaryGenerator {
    CanonExpr zeta0, zeta1;

    bool operator==(const EvolutionaryGenerator&) const = default;
};

namespace detail {

inline void validate_point_component(const CanonExpr& e, const std::string& which) {
    if (e.contains_eps()) throw ConfigError(which + " must not contain eps");
    if (e.max_jet_order(0) > 0) throw ConfigError(which + " must depend on (x, y) only");
    if (e.uses_family(1) || e.uses_family(2))
        throw ConfigError(which + " must be written in the y family");
}

}  // namespace detail

inline void validate(const PointGenerator& g) {
    detail::validate_point_component(g.xi0, "xi0");
    detail::validate_point_component(g.eta0, "eta0");
    detail::validate_point_component(g.xi1, "xi1");
    detail::validate_point_component(g.eta1, "eta1");
}

/// zeta_k = eta_k - y' * xi_k for both eps orders.
inline EvolutionaryGenerator to_evolutionary(const PointGenerator& g) {
    validate(g);
    CanonExpr yp = CanonExpr::y(1);
    return {g.eta0.sub(yp.mul(g.xi0)), g.eta1.sub(yp.mul(g.xi1))};
}

/// Evolutionary prolongation: the k-th prolonged component is D^k zeta.
inline CanonExpr prolong(const CanonExpr& zeta, int k) {
    return zeta.nth_total_derivative(k);
}

/// Left side of the approximate determining equation, restricted to the
/// solution manifold and truncated at O(eps^2):
///   D^n zeta - sum_j d(f)/d(y^(j)) * D^j zeta,  with y^(n) := f0 + eps*f1,
/// where zeta = zeta0 + eps*zeta1 and f = f0 + eps*f1. Vanishes identically
/// iff the generator is an approximate symmetry.
inline CanonExpr determining_expr(const PerturbedODE& ode, const EvolutionaryGenerator& g) {
    CanonExpr zeta = g.zeta0.add(g.zeta1.times_eps());
    CanonExpr f = ode.rhs();
    CanonExpr det = zeta.nth_total_derivative(ode.order);
    CanonExpr dz = zeta;
    for (int j = 0; j < ode.order; ++j) {
        det = det.sub(f.partial_jet({0, j}).mul(dz));
        if (j + 1 < ode.order) dz = dz.total_derivative();
    }
    return det.substitute_jet(0, ode.order, f);
}

/// Residual pair (eps^0 part, eps^1 part); the generator is an approximate
/// symmetry iff both are structurally zero.
inline std::pair<CanonExpr, CanonExpr> check_symmetry(const PerturbedODE& ode,
                                                      const EvolutionaryGenerator& g) {
    CanonExpr det = determining_expr(ode, g);
    return {det.eps_part(0), det.eps_part(1)};
}

inline std::pair<CanonExpr, CanonExpr> check_symmetry(const PerturbedODE& ode,
                                                      const PointGenerator& g) {
    return check_symmetry(ode, to_evolutionary(g));
}

inline bool is_symmetry(const PerturbedODE& ode, const EvolutionaryGenerator& g) {
    auto [r0, r1] = check_symmetry(ode, g);
    return r0.is_zero() && r1.is_zero();
}

inline bool is_symmetry(const PerturbedODE& ode, const PointGenerator& g) {
    return is_symmetry(ode, to_evolutionary(g));
}

/// Finite linear ansatz for generator components. Point components run over
/// x_basis * y^d; evolutionary characteristics run over an x basis times jet
/// monomials of bounded order and total degree.
struct AnsatzSpec {
    std::vector<CanonExpr> x_basis;
    int y_degree = 2;
    std::vector<CanonExpr> evolutionary_x_basis;  // falls back to x_basis when empty
    int jet_order = 1;
    int jet_degree = 3;

    static AnsatzSpec defaults() {
        AnsatzSpec a;
        a.x_basis = {CanonExpr::one(),    CanonExpr::x(),      CanonExpr::sin(1),
                     CanonExpr::cos(1),   CanonExpr::sin(2),   CanonExpr::cos(2)};
        for (const CanonExpr& b : std::vector<CanonExpr>{CanonExpr::one(), CanonExpr::x()})
            for (const CanonExpr& t :
                 std::vector<CanonExpr>{CanonExpr::one(), CanonExpr::sin(1), CanonExpr::cos(1),
                                        CanonExpr::sin(2), CanonExpr::cos(2)})
                a.evolutionary_x_basis.push_back(b.mul(t));
        return a;
    }

    std::vector<CanonExpr> point_monomials() const {
        validate_x_basis(x_basis);
        std::vector<CanonExpr> out;
        for (const auto& b : x_basis)
            for (int d = 0; d <= y_degree; ++d) out.push_back(b.mul(CanonExpr::y(0).pow(d)));
        return out;
    }

    std::vector<CanonExpr> evolutionary_monomials() const {
        const auto& basis = evolutionary_x_basis.empty() ? x_basis : evolutionary_x_basis;
        validate_x_basis(basis);
        std::vector<std::map<JetVar, int>> jets;
        std::map<JetVar, int> current;
        enumerate_jets(0, jet_degree, current, jets);
        std::vector<CanonExpr> out;
        for (const auto& b : basis)
            for (const auto& jm : jets) {
                CanonExpr m = b;
                for (const auto& [v, e] : jm) m = m.mul(CanonExpr::jet(v.family, v.order, 1).pow(e));
                out.push_back(m);
            }
        return out;
    }

private:
    void enumerate_jets(int order, int budget, std::map<JetVar, int>& current,
                        std::vector<std::map<JetVar, int>>& out) const {
        if (order > jet_order) {
            out.push_back(current);
            return;
        }
        for (int e = 0; e <= budget; ++e) {
            if (e > 0) current[{0, order}] = e;
            enumerate_jets(order + 1, budget - e, current, out);
            current.erase({0, order});
        }
    }

    static void validate_x_basis(const std::vector<CanonExpr>& basis) {
        for (const auto& b : basis) {
            if (b.contains_eps() || b.contains_unknowns() || b.max_jet_order(0) >= 0 ||
                b.uses_family(1) || b.uses_family(2))
                throw ConfigError("ansatz x-basis entries must depend on x only");
        }
    }
};

namespace detail {

inline std::map<std::string, Rational> full_assignment(
    const std::vector<std::string>& names, const std::map<std::string, Rational>& sparse) {
    std::map<std::string, Rational> out;
    for (const auto& n : names) {
        auto it = sparse.find(n);
        out[n] = it == sparse.end() ? Rational(0) : it->second;
    }
    return out;
}

/// Coordinates of a point generator in monomial space, keyed per component.
inline std::map<std::string, Rational> generator_coordinates(const PointGenerator& g) {
    std::map<std::string, Rational> out;
    auto put = [&out](const char* prefix, const CanonExpr& e) {
        for (const auto& [k, c] : e.terms()) {
            if (!c.is_constant()) throw Error("generator with unresolved unknowns");
            if (!c.constant().is_zero()) out[std::string(prefix) + term_key_str(k)] = c.constant();
        }
    };
    put("xi0:", g.xi0);
    put("eta0:", g.eta0);
    put("xi1:", g.xi1);
    put("eta1:", g.eta1);
    return out;
}

}  // namespace detail

inline PointGenerator combine(const std::vector<PointGenerator>& gens,
                              const std::vector<Rational>& coeffs) {
    PointGenerator out;
    for (std::size_t i = 0; i < gens.size(); ++i) {
        out.xi0 = out.xi0.add(gens[i].xi0.scale(coeffs[i]));
        out.eta0 = out.eta0.add(gens[i].eta0.scale(coeffs[i]));
        out.xi1 = out.xi1.add(gens[i].xi1.scale(coeffs[i]));
        out.eta1 = out.eta1.add(gens[i].eta1.scale(coeffs[i]));
    }
    return out;
}

/// True when g lies in the exact rational span of basis.
inline bool in_point_span(const std::vector<PointGenerator>& basis, const PointGenerator& g) {
    std::vector<std::map<std::string, Rational>> vecs;
    vecs.reserve(basis.size());
    for (const auto& b : basis) vecs.push_back(detail::generator_coordinates(b));
    return span_coordinates(vecs, detail::generator_coordinates(g)).has_value();
}

/// Exact point symmetries of the unperturbed equation over the ansatz: one
/// generator per nullspace direction of the split determining system, brought
/// to a canonical reduced basis.
inline std::vector<PointGenerator> solve_exact(const PerturbedODE& ode,
                                               const AnsatzSpec& ansatz) {
    std::vector<CanonExpr> mono = ansatz.point_monomials();
    std::vector<std::string> names;
    CanonExpr xi, eta;
    for (std::size_t i = 0; i < mono.size(); ++i) {
        std::string n = "xi" + std::to_string(i);
        names.push_back(n);
        xi = xi.add(mono[i].scaled_by_unknown(n));
    }
    for (std::size_t i = 0; i < mono.size(); ++i) {
        std::string n = "eta" + std::to_string(i);
        names.push_back(n);
        eta = eta.add(mono[i].scaled_by_unknown(n));
    }
    EvolutionaryGenerator g{eta.sub(CanonExpr::y(1).mul(xi)), CanonExpr::zero()};
    CanonExpr det = determining_expr(ode.unperturbed(), g);
    SolutionSpace sol = solve(split(det, names));
    std::vector<PointGenerator> out;
    for (const auto& vec : rref_vectors(sol.nullspace, names)) {
        auto a = detail::full_assignment(names, vec);
        out.push_back(PointGenerator{xi.substituted_unknowns(a), eta.substituted_unknowns(a),
                                     CanonExpr::zero(), CanonExpr::zero()});
    }
    return out;
}

struct ApproxSymmetries {
    std::vector<PointGenerator> exact_basis;  // of the unperturbed equation
    std::vector<PointGenerator> nontrivial;   // nonzero exact part, completed
    std::vector<PointGenerator> trivial;      // eps * (exact symmetry)
    std::vector<std::size_t> forced_zero;     // exact-basis indices pinned to 0
};

/// BGI approximate point symmetries. The exact block is solved first; the
/// eps-order block is then solved with the exact part written as an unknown
/// combination of the exact basis, which keeps the system linear and makes
/// the forced-zero constraints read directly off the solution space.
inline ApproxSymmetries solve_approx(const PerturbedODE& ode, const AnsatzSpec& ansatz) {
    ApproxSymmetries result;
    result.exact_basis = solve_exact(ode, ansatz);
    const std::size_t r = result.exact_basis.size();

    std::vector<CanonExpr> mono = ansatz.point_monomials();
    std::vector<std::string> names;
    CanonExpr xi0, eta0, xi1, eta1;
    for (std::size_t i = 0; i < r; ++i) {
        std::string n = "s" + std::to_string(i);
        names.push_back(n);
        xi0 = xi0.add(result.exact_basis[i].xi0.scaled_by_unknown(n));
        eta0 = eta0.add(result.exact_basis[i].eta0.scaled_by_unknown(n));
    }
    for (std::size_t i = 0; i < mono.size(); ++i) {
        std::string n = "p" + std::to_string(i);
        names.push_back(n);
        xi1 = xi1.add(mono[i].scaled_by_unknown(n));
    }
    for (std::size_t i = 0; i < mono.size(); ++i) {
        std::string n = "q" + std::to_string(i);
        names.push_back(n);
        eta1 = eta1.add(mono[i].scaled_by_unknown(n));
    }

    CanonExpr yp = CanonExpr::y(1);
    EvolutionaryGenerator g{eta0.sub(yp.mul(xi0)), eta1.sub(yp.mul(xi1))};
    CanonExpr det = determining_expr(ode, g);
    if (!det.eps_part(0).is_zero())
        throw Error("exact block of the approximate determining system did not vanish");
    SolutionSpace sol = solve(split(det.eps_part(1), names));

    std::vector<bool> seen(r, false);
    for (const auto& vec : rref_vectors(sol.nullspace, names)) {
        auto a = detail::full_assignment(names, vec);
        PointGenerator pg{xi0.substituted_unknowns(a), eta0.substituted_unknowns(a),
                          xi1.substituted_unknowns(a), eta1.substituted_unknowns(a)};
        bool exact_part = false;
        for (std::size_t i = 0; i < r; ++i) {
            if (!a.at("s" + std::to_string(i)).is_zero()) {
                exact_part = true;
                seen[i] = true;
            }
        }
        (exact_part ? result.nontrivial : result.trivial).push_back(std::move(pg));
    }
    for (std::size_t i = 0; i < r; ++i)
        if (!seen[i]) result.forced_zero.push_back(i);

    for (const auto& pg : result.nontrivial)
        if (!is_symmetry(ode, pg)) throw Error("approximate symmetry failed self-audit");
    for (const auto& pg : result.trivial)
        if (!is_symmetry(ode, pg)) throw Error("trivial approximate symmetry failed self-audit");
    return result;
}

struct StabilityReport {
    std::vector<PointGenerator> exact_basis;
    std::vector<std::size_t> stable;
    std::vector<std::size_t> unstable;
    /// Completed approximate generator for each stable index, X0 preserved.
    std::map<std::size_t, PointGenerator> completions;
    std::vector<std::size_t> forced_zero;
    ApproxSymmetries approx;
};

/// An exact symmetry is stable iff it lies in the span of the exact parts of
/// the approximate point symmetries; membership is decided in exact rational
/// arithmetic.
inline StabilityReport classify_stability(const PerturbedODE& ode, const AnsatzSpec& ansatz) {
    StabilityReport rep;
    rep.approx = solve_approx(ode, ansatz);
    rep.exact_basis = rep.approx.exact_basis;
    rep.forced_zero = rep.approx.forced_zero;

    std::vector<std::map<std::string, Rational>> basis0;
    for (const auto& g : rep.approx.nontrivial)
        basis0.push_back(
            detail::generator_coordinates(PointGenerator{g.xi0, g.eta0, {}, {}}));

    for (std::size_t i = 0; i < rep.exact_basis.size(); ++i) {
        auto target = detail::generator_coordinates(rep.exact_basis[i]);
        auto coeffs = span_coordinates(basis0, target);
        if (!coeffs) {
            rep.unstable.push_back(i);
            continue;
        }
        rep.stable.push_back(i);
        rep.completions[i] = combine(rep.approx.nontrivial, *coeffs);
    }
    return rep;
}

/// eps-order obstruction of a bare exact characteristic: the inhomogeneity
/// the local counterpart's zeta1 has to cancel.
inline CanonExpr counterpart_forcing(const PerturbedODE& ode, const PointGenerator& g0) {
    EvolutionaryGenerator g{to_evolutionary(g0).zeta0, CanonExpr::zero()};
    return determining_expr(ode, g).eps_part(1);
}

/// First-order local symmetry completing an exact point symmetry g0 of the
/// unperturbed equation: zeta0 is fixed to the characteristic of g0 and zeta1
/// is solved for over the evolutionary ansatz. The returned zeta1 is the
/// particular solution with all free coefficients set to zero.
inline EvolutionaryGenerator local_counterpart(const PerturbedODE& ode,
                                               const PointGenerator& g0,
                                               const AnsatzSpec& ansatz) {
    if (!is_symmetry(ode.unperturbed(), g0))
        throw ConfigError("generator is not an exact symmetry of the unperturbed equation");
    CanonExpr zeta0 = to_evolutionary(g0).zeta0;
    std::vector<CanonExpr> mono = ansatz.evolutionary_monomials();
    std::vector<std::string> names;
    CanonExpr zeta1;
    for (std::size_t i = 0; i < mono.size(); ++i) {
        std::string n = "z" + std::to_string(i);
        names.push_back(n);
        zeta1 = zeta1.add(mono[i].scaled_by_unknown(n));
    }
    CanonExpr det = determining_expr(ode, {zeta0, zeta1});
    if (!det.eps_part(0).is_zero())
        throw Error("exact block of the counterpart system did not vanish");
    SolutionSpace sol;
    try {
        sol = solve(split(det.eps_part(1), names));
    } catch (const InconsistentSystem&) {
        throw NoSolutionInAnsatz();
    }
    auto a = detail::full_assignment(names, sol.particular);
    EvolutionaryGenerator out{zeta0, zeta1.substituted_unknowns(a)};
    if (!is_symmetry(ode, out)) throw Error("local counterpart failed self-audit");
    return out;
}

}  // namespace symmflow
