#pragma once

#include <array>
#include <set>
#include <string>
#include <vector>

#include "symmflow/canon.hpp"
#include "symmflow/errors.hpp"
#include "symmflow/linsolve.hpp"
#include "symmflow/ode.hpp"
#include "symmflow/symmetry.hpp"

namespace symmflow {

/// Approximate integrating factor mu = mu0 + eps*mu1 for a second-order ODE;
/// components depend on (x, y, y') with the eps grading in the field position.
struct IntegratingFactor {
    CanonExpr mu0, mu1;
};

/// First integral psi = psi0 + eps*psi1 with D(psi) = lambda*mu*(y'' - f).
struct FirstIntegral {
    CanonExpr psi0, psi1;
    Rational lambda;
};

namespace detail {

inline void validate_factor_component(const CanonExpr& e, const std::string& which) {
    if (e.contains_eps()) throw ConfigError(which + " must not contain eps");
    if (e.max_jet_order(0) > 1) throw ConfigError(which + " must depend on (x, y, y') only");
    if (e.uses_family(1) || e.uses_family(2))
        throw ConfigError(which + " must be written in the y family");
}

/// The four linear conditions on (mu0, mu1) for one eps order. `mu` is the
/// component being conditioned, `pair_term` carries the cross term mu0*f1
/// entering the eps-order conditions (zero for the exact block).
inline std::array<CanonExpr, 2> factor_conditions(const CanonExpr& mu, const CanonExpr& f0,
                                                  const CanonExpr& pair_term) {
    const JetVar Y{0, 0}, YP{0, 1};
    CanonExpr yp = CanonExpr::y(1);
    CanonExpr mf = mu.mul(f0);

    // y'*mu_yy' + mu_xy' + 2*mu_y + (mu*f0)_y'y' + (pair)_y'y'
    CanonExpr c1 = yp.mul(mu.partial_jet(Y).partial_jet(YP))
                       .add(mu.partial_x().partial_jet(YP))
                       .add(mu.partial_jet(Y).scale(Rational(2)))
                       .add(mf.partial_jet(YP).partial_jet(YP))
                       .add(pair_term.partial_jet(YP).partial_jet(YP));

    // y'^2*mu_yy + 2y'*mu_xy + mu_xx + y'(mu*f0)_yy' + (mu*f0)_xy' - (mu*f0)_y
    //   + y'(pair)_yy' + (pair)_xy' - (pair)_y
    CanonExpr c2 = yp.pow(2)
                       .mul(mu.partial_jet(Y).partial_jet(Y))
                       .add(yp.mul(mu.partial_x().partial_jet(Y)).scale(Rational(2)))
                       .add(mu.partial_x().partial_x())
                       .add(yp.mul(mf.partial_jet(Y).partial_jet(YP)))
                       .add(mf.partial_x().partial_jet(YP))
                       .sub(mf.partial_jet(Y))
                       .add(yp.mul(pair_term.partial_jet(Y).partial_jet(YP)))
                       .add(pair_term.partial_x().partial_jet(YP))
                       .sub(pair_term.partial_jet(Y));
    return {c1, c2};
}

}  // namespace detail

/// Evaluates the four integrating-factor conditions literally; all four are
/// structurally zero iff mu is an approximate integrating factor of the ODE.
inline std::array<CanonExpr, 4> check_factor(const PerturbedODE& ode,
                                             const IntegratingFactor& mu) {
    if (ode.order != 2) throw ConfigError("integrating factors require a second-order ODE");
    detail::validate_factor_component(mu.mu0, "mu0");
    detail::validate_factor_component(mu.mu1, "mu1");
    auto exact = detail::factor_conditions(mu.mu0, ode.f0, CanonExpr::zero());
    auto approx = detail::factor_conditions(mu.mu1, ode.f0, mu.mu0.mul(ode.f1));
    return {exact[0], exact[1], approx[0], approx[1]};
}

inline bool is_integrating_factor(const PerturbedODE& ode, const IntegratingFactor& mu) {
    auto r = check_factor(ode, mu);
    return r[0].is_zero() && r[1].is_zero() && r[2].is_zero() && r[3].is_zero();
}

/// Basis of approximate integrating factors within the ansatz (components
/// over the evolutionary monomials restricted to jet order <= 1).
inline std::vector<IntegratingFactor> solve_factor(const PerturbedODE& ode,
                                                   const AnsatzSpec& ansatz) {
    if (ode.order != 2) throw ConfigError("integrating factors require a second-order ODE");
    std::vector<CanonExpr> mono;
    for (const auto& m : ansatz.evolutionary_monomials())
        if (m.max_jet_order(0) <= 1) mono.push_back(m);
    std::vector<std::string> names;
    CanonExpr mu0, mu1;
    for (std::size_t i = 0; i < mono.size(); ++i) {
        std::string n = "m" + std::to_string(i);
        names.push_back(n);
        mu0 = mu0.add(mono[i].scaled_by_unknown(n));
    }
    for (std::size_t i = 0; i < mono.size(); ++i) {
        std::string n = "w" + std::to_string(i);
        names.push_back(n);
        mu1 = mu1.add(mono[i].scaled_by_unknown(n));
    }
    auto exact = detail::factor_conditions(mu0, ode.f0, CanonExpr::zero());
    auto approx = detail::factor_conditions(mu1, ode.f0, mu0.mul(ode.f1));

    LinearSystem sys;
    sys.unknowns = names;
    for (const CanonExpr* c : {&exact[0], &exact[1], &approx[0], &approx[1]})
        for (const auto& [k, coeff] : c->terms()) sys.add_row(coeff);
    SolutionSpace sol = solve(sys);

    std::vector<IntegratingFactor> out;
    for (const auto& vec : rref_vectors(sol.nullspace, names)) {
        auto a = detail::full_assignment(names, vec);
        IntegratingFactor f{mu0.substituted_unknowns(a), mu1.substituted_unknowns(a)};
        if (!is_integrating_factor(ode, f))
            throw Error("integrating factor failed self-audit");
        out.push_back(std::move(f));
    }
    return out;
}

namespace detail {

/// psi candidates: antiderivative-shaped monomials able to reach every
/// monomial of the target under the total derivative.
inline std::vector<CanonExpr> psi_candidates(const CanonExpr& target) {
    std::set<TermKey> keys;
    auto add = [&keys](TermKey k) {
        k.epspow = 0;
        keys.insert(std::move(k));
    };
    for (const auto& [k, c] : target.terms()) {
        // raise the x power (d/dx direction)
        TermKey up = k;
        up.xpow += 1;
        add(up);
        add(k);
        // lower one derivative: replace one power of y^(j+1) by y^(j)
        for (const auto& [v, e] : k.jet) {
            if (v.order == 0) continue;
            TermKey low = k;
            if (e == 1)
                low.jet.erase(v);
            else
                low.jet[v] = e - 1;
            JetVar down{v.family, v.order - 1};
            low.jet[down] += 1;
            add(low);
            TermKey lowx = low;
            lowx.xpow += 1;
            add(lowx);
        }
    }
    std::vector<CanonExpr> out;
    for (const auto& k : keys) {
        if (k == TermKey{}) continue;  // constants never matter for D(psi)
        CanonExpr m = CanonExpr::one();
        if (k.xpow) m = m.mul(CanonExpr::x(k.xpow));
        m = m.mul(CanonExpr::trig(k.trig));
        for (const auto& [v, e] : k.jet) m = m.mul(CanonExpr::jet(v.family, v.order, e));
        out.push_back(m);
    }
    return out;
}

}  // namespace detail

/// Solves D(psi) = lambda * mu * (y'' - f0 - eps*f1) for psi and a rational
/// lambda != 0, normalized so the leading y'-power coefficient of psi0 is 1
/// and psi carries no additive constant.
inline FirstIntegral find_first_integral(const PerturbedODE& ode, const IntegratingFactor& mu,
                                         const std::vector<CanonExpr>& psi_ansatz = {}) {
    if (!is_integrating_factor(ode, mu))
        throw ConfigError("mu does not satisfy the integrating-factor conditions");
    CanonExpr target =
        mu.mu0.add(mu.mu1.times_eps()).mul(CanonExpr::y(2).sub(ode.rhs()));
    std::vector<CanonExpr> mono =
        psi_ansatz.empty() ? detail::psi_candidates(target) : psi_ansatz;

    std::vector<std::string> names;
    CanonExpr psi0, psi1;
    for (std::size_t i = 0; i < mono.size(); ++i) {
        std::string n = "u" + std::to_string(i);
        names.push_back(n);
        psi0 = psi0.add(mono[i].scaled_by_unknown(n));
    }
    for (std::size_t i = 0; i < mono.size(); ++i) {
        std::string n = "v" + std::to_string(i);
        names.push_back(n);
        psi1 = psi1.add(mono[i].scaled_by_unknown(n));
    }
    names.push_back("lambda");

    CanonExpr psi = psi0.add(psi1.times_eps());
    CanonExpr residual =
        psi.total_derivative().sub(target.scaled_by_unknown("lambda"));
    SolutionSpace sol = solve(split(residual, names));

    for (const auto& vec : sol.nullspace) {
        auto it = vec.find("lambda");
        if (it == vec.end() || it->second.is_zero()) continue;
        auto a = detail::full_assignment(names, vec);
        CanonExpr p0 = psi0.substituted_unknowns(a);
        CanonExpr p1 = psi1.substituted_unknowns(a);
        // normalize: highest y'-power monomial of psi0 gets coefficient 1
        Rational lead(0);
        int best = -1;
        for (const auto& [k, c] : p0.terms()) {
            auto jt = k.jet.find({0, 1});
            int deg = jt == k.jet.end() ? 0 : jt->second;
            if (deg > best) {
                best = deg;
                lead = c.constant();
            }
        }
        if (lead.is_zero()) continue;
        Rational s = lead.inverse();
        FirstIntegral fi{p0.scale(s), p1.scale(s), a.at("lambda") * s};
        // identity audit: D(psi) - lambda*mu*(y'' - f) == 0
        CanonExpr check = fi.psi0.add(fi.psi1.times_eps())
                              .total_derivative()
                              .sub(target.scale(fi.lambda));
        if (!check.is_zero()) throw Error("first integral failed self-audit");
        return fi;
    }
    throw NoSolutionInAnsatz();
}

}  // namespace symmflow
