#pragma once

#include <algorithm>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "symmflow/ast.hpp"
#include "symmflow/canon.hpp"
#include "symmflow/canonicalize.hpp"
#include "symmflow/errors.hpp"
#include "symmflow/grid.hpp"
#include "symmflow/linsolve.hpp"
#include "symmflow/ode.hpp"
#include "symmflow/symmetry.hpp"

namespace symmflow {

/// eps-order split of a perturbed relation under y = y0 + eps*y1: eq0 is
/// written in the y0 family, eq1 is affine in the y1 jets with y0-dependent
/// coefficients.
struct OrderSplit {
    CanonExpr eq0;
    CanonExpr eq1;
};

/// Substitutes y := y0 + eps*y1 (all jets follow by total differentiation)
/// and collects the eps^0 and eps^1 coefficient equations.
inline OrderSplit split_relation(const CanonExpr& relation) {
    CanonExpr series = CanonExpr::jet(1, 0).add(CanonExpr::jet(2, 0).times_eps());
    CanonExpr sub = relation.substitute_jet(0, 0, series);
    return {sub.eps_part(0), sub.eps_part(1)};
}

inline OrderSplit split_orders(const PerturbedODE& ode) {
    return split_relation(ode.relation());
}

namespace detail {

struct RootData {
    int zero_multiplicity = 0;
    std::map<int, int> imaginary;  // m -> multiplicity of +-i*m
};

/// Factor p(x) = lead * x^r0 * prod (x^2 + m^2)^r_m or reject.
inline RootData factor_roots(const std::vector<Rational>& coeffs) {
    if (coeffs.empty() || coeffs.back().is_zero())
        throw ConfigError("characteristic polynomial with zero leading coefficient");
    std::vector<Rational> p = coeffs;
    RootData roots;
    while (!p.empty() && p.front().is_zero()) {
        ++roots.zero_multiplicity;
        p.erase(p.begin());
    }
    for (std::size_t i = 1; i < p.size(); i += 2)
        if (!p[i].is_zero()) throw UnsupportedRoots("odd-degree term present");
    // g(t) with t = x^2
    std::vector<Rational> g;
    for (std::size_t i = 0; i < p.size(); i += 2) g.push_back(p[i]);
    auto eval_g = [&g](const Rational& t) {
        Rational acc(0);
        for (std::size_t i = g.size(); i-- > 0;) acc = acc * t + g[i];
        return acc;
    };
    int m = 1;
    while (g.size() > 1) {
        Rational bound = (g.front() / g.back()).abs();
        while (Rational(static_cast<long>(m)) * Rational(static_cast<long>(m)) <= bound) {
            if (eval_g(Rational(-static_cast<long>(m) * static_cast<long>(m))).is_zero()) break;
            ++m;
        }
        Rational t0(-static_cast<long>(m) * static_cast<long>(m));
        if (!eval_g(t0).is_zero())
            throw UnsupportedRoots("no integer frequency divides the even part");
        // synthetic division of g by (t - t0)
        std::vector<Rational> q(g.size() - 1, Rational(0));
        Rational carry(0);
        for (std::size_t i = g.size(); i-- > 1;) {
            carry = g[i] + carry;
            q[i - 1] = carry;
            carry = carry * t0;
        }
        roots.imaginary[m] += 1;
        g = q;
    }
    return roots;
}

}  // namespace detail

/// Constant-coefficient linear operator p(D) = sum_j c_j D^j applied to a
/// trig-polynomial forcing in x; characteristic roots are restricted to
/// {0} and {+-i*m} with positive integer m (checked at construction).
struct ForcedLinearODE {
    std::vector<Rational> char_coeffs;  // c_0 .. c_n
    CanonExpr forcing;

    ForcedLinearODE(std::vector<Rational> coeffs, CanonExpr f)
        : char_coeffs(std::move(coeffs)), forcing(std::move(f)) {
        roots_ = detail::factor_roots(char_coeffs);
        if (forcing.contains_eps() || forcing.max_jet_order(0) >= 0 || forcing.uses_family(1) ||
            forcing.uses_family(2))
            throw ConfigError("forcing must depend on x only");
    }

    int root_multiplicity(int freq) const {
        if (freq == 0) return roots_.zero_multiplicity;
        auto it = roots_.imaginary.find(freq);
        return it == roots_.imaginary.end() ? 0 : it->second;
    }

    CanonExpr apply(const CanonExpr& y) const {
        CanonExpr out;
        CanonExpr d = y;
        for (std::size_t j = 0; j < char_coeffs.size(); ++j) {
            out = out.add(d.scale(char_coeffs[j]));
            if (j + 1 < char_coeffs.size()) d = d.partial_x();
        }
        return out;
    }

    /// Pure-x solutions of p(D)y = 0 spanned by the stored roots.
    std::vector<CanonExpr> homogeneous_modes() const {
        std::vector<CanonExpr> modes;
        for (int t = 0; t < roots_.zero_multiplicity; ++t) modes.push_back(CanonExpr::x(t));
        for (const auto& [m, mult] : roots_.imaginary)
            for (int t = 0; t < mult; ++t) {
                modes.push_back(CanonExpr::x(t).mul(CanonExpr::sin(m)));
                modes.push_back(CanonExpr::x(t).mul(CanonExpr::cos(m)));
            }
        return modes;
    }

private:
    detail::RootData roots_;
};

/// Particular solution by undetermined coefficients; resonant frequencies are
/// promoted by the root multiplicity. The result has zero projection on the
/// homogeneous modes.
inline CanonExpr solve_forced(const ForcedLinearODE& p) {
    if (p.forcing.is_zero()) return CanonExpr::zero();
    // group forcing monomials by frequency: freq -> max x power
    std::map<int, int> groups;
    for (const auto& [k, c] : p.forcing.terms()) {
        int freq = k.trig.is_none() ? 0 : k.trig.freq;
        auto it = groups.find(freq);
        groups[freq] = it == groups.end() ? k.xpow : std::max(it->second, k.xpow);
    }
    CanonExpr trial;
    std::vector<std::string> names;
    std::size_t counter = 0;
    auto fresh = [&names, &counter]() {
        std::string n = "a" + std::to_string(counter++);
        names.push_back(n);
        return n;
    };
    for (const auto& [freq, maxpow] : groups) {
        int r = p.root_multiplicity(freq);
        for (int j = 0; j <= maxpow; ++j) {
            CanonExpr xp = CanonExpr::x(r + j);
            if (freq == 0) {
                trial = trial.add(xp.scaled_by_unknown(fresh()));
            } else {
                trial = trial.add(xp.mul(CanonExpr::sin(freq)).scaled_by_unknown(fresh()));
                trial = trial.add(xp.mul(CanonExpr::cos(freq)).scaled_by_unknown(fresh()));
            }
        }
    }
    CanonExpr residual = p.apply(trial).sub(p.forcing);
    SolutionSpace sol = solve(split(residual, names));
    CanonExpr out = trial.substituted_unknowns(detail::full_assignment(names, sol.particular));
    if (!p.apply(out).sub(p.forcing).is_zero())
        throw Error("undetermined-coefficient solve failed self-audit");
    return out;
}

/// Closed-form series y(x; eps) = y0 + eps*y1. Canonical forms are kept when
/// the components lie in the fragment; constants map free homogeneous
/// amplitudes (value unset) and resolved ones.
struct SeriesSolution {
    Ast y0;
    Ast y1;
    std::optional<CanonExpr> y0c;
    std::optional<CanonExpr> y1c;
    std::map<std::string, std::optional<Rational>> constants;

    static SeriesSolution from_canonical(const CanonExpr& y0c_, const CanonExpr& y1c_) {
        SeriesSolution s;
        s.y0c = y0c_;
        s.y1c = y1c_;
        s.y0 = to_ast(y0c_);
        s.y1 = to_ast(y1c_);
        return s;
    }
};

/// Initial condition  y^(order)(0) = value0 + eps*value1.
struct InitialCondition {
    int order = 0;
    Rational value0;
    Rational value1;
};

namespace detail {

/// Exact evaluation of a pure-x canonical expression at x = 0.
inline LinForm eval_at_zero(const CanonExpr& e) {
    LinForm acc;
    for (const auto& [k, c] : e.terms()) {
        if (!k.jet.empty() || k.epspow != 0)
            throw ConfigError("expected a pure function of x");
        if (k.xpow > 0) continue;
        if (k.trig.kind == TrigKind::sin) continue;
        acc = acc + c;  // cos(m*0) = 1, constant term
    }
    return acc;
}

inline void fit_order(CanonExpr& component, std::vector<InitialCondition> ics,
                      bool eps_order, const std::set<std::string>& free_constants,
                      std::map<std::string, std::optional<Rational>>& constants) {
    std::sort(ics.begin(), ics.end(), [](const InitialCondition& a, const InitialCondition& b) {
        return a.order < b.order;
    });
    LinearSystem sys;
    for (const auto& n : free_constants) sys.unknowns.push_back(n);
    CanonExpr d = component;
    int reached = 0;
    for (const auto& ic : ics) {
        while (reached < ic.order) {
            d = d.partial_x();
            ++reached;
        }
        LinForm row = eval_at_zero(d) - LinForm(eps_order ? ic.value1 : ic.value0);
        sys.add_row(row);
    }
    SolutionSpace sol;
    try {
        sol = solve(sys);
    } catch (const InconsistentSystem& e) {
        throw InconsistentSystem(std::string(eps_order ? "eps^1" : "eps^0") +
                                 " conditions: " + e.certificate);
    }
    if (!sol.nullspace.empty())
        throw UnderdeterminedSystem(std::string(eps_order ? "eps^1" : "eps^0") + " conditions");
    auto a = full_assignment(sys.unknowns, sol.particular);
    component = component.substituted_unknowns(a);
    for (const auto& [n, v] : a) constants[n] = v;
}

}  // namespace detail

/// Fit the free homogeneous constants of a series family to the initial
/// conditions, one exact linear solve per eps order. The family must be
/// affine in its free constants with disjoint constant sets per order.
inline SeriesSolution apply_ics(const SeriesSolution& family,
                                const std::vector<InitialCondition>& ics) {
    if (!family.y0c || !family.y1c)
        throw ConfigError("apply_ics needs canonicalizable series components");
    std::set<std::string> free0 = family.y0c->unknown_names();
    std::set<std::string> free1 = family.y1c->unknown_names();

    SeriesSolution out = family;
    CanonExpr y0 = *family.y0c;
    CanonExpr y1 = *family.y1c;
    detail::fit_order(y0, ics, false, free0, out.constants);
    detail::fit_order(y1, ics, true, free1, out.constants);
    out.y0c = y0;
    out.y1c = y1;
    out.y0 = to_ast(y0);
    out.y1 = to_ast(y1);
    return out;
}

/// Approximately invariant solution of a characteristic zeta0 = y - h(x):
/// y0 = h and y1 = -zeta1(x, h, h').
inline SeriesSolution invariant_solution(const EvolutionaryGenerator& g) {
    CanonExpr dy = g.zeta0.partial_jet({0, 0});
    if (!(dy == CanonExpr::one())) throw NotAffineInY();
    CanonExpr h = CanonExpr::y(0).sub(g.zeta0);
    if (h.max_jet_order(0) >= 0 || h.uses_family(1) || h.uses_family(2)) throw NotAffineInY();
    CanonExpr y1 = g.zeta1.substitute_jet(0, 0, h).neg();
    return SeriesSolution::from_canonical(h, y1);
}

/// Symbolic residuals of the series in the perturbed equation: the pair of
/// eps^0 and eps^1 coefficients after substituting y := y0 + eps*y1.
inline std::pair<CanonExpr, CanonExpr> verify_series_symbolic(const PerturbedODE& ode,
                                                              const SeriesSolution& s) {
    if (!s.y0c || !s.y1c) throw NotCanonical("series components are not canonicalizable");
    CanonExpr combined = s.y0c->add(s.y1c->times_eps());
    CanonExpr sub = ode.relation().substitute_jet(0, 0, combined);
    return {sub.eps_part(0), sub.eps_part(1)};
}

/// Same check against an order split (eq0 in the y0 family, eq1 in y0/y1).
inline std::pair<CanonExpr, CanonExpr> verify_series_symbolic(const OrderSplit& split,
                                                              const SeriesSolution& s) {
    if (!s.y0c || !s.y1c) throw NotCanonical("series components are not canonicalizable");
    CanonExpr r0 = split.eq0.substitute_jet(1, 0, *s.y0c);
    CanonExpr r1 = split.eq1.substitute_jet(1, 0, *s.y0c).substitute_jet(2, 0, *s.y1c);
    return {r0, r1};
}

/// Grid maxima of the per-order residuals, evaluated through the trees:
///   R0 = y0^(n) - f0|y0,   R1 = y1^(n) - sum_j df0/dy^(j)|y0 * y1^(j) - f1|y0.
inline std::pair<double, double> verify_series_numeric(const PerturbedODE& ode,
                                                       const SeriesSolution& s,
                                                       const GridSpec& grid,
                                                       const AstEnv& extra = {}) {
    int n = ode.order;
    std::vector<Ast> d0{s.y0}, d1{s.y1};
    for (int j = 0; j < n; ++j) {
        d0.push_back(ast_derivative(d0.back()));
        d1.push_back(ast_derivative(d1.back()));
    }
    std::vector<CanonExpr> df0;
    for (int j = 0; j < n; ++j) df0.push_back(ode.f0.partial_jet({0, j}));

    double max0 = 0.0, max1 = 0.0;
    for (double x : grid.points()) {
        AstEnv env = extra;
        env["x"] = x;
        env["z"] = x;
        env["eps"] = 0.0;
        CanonEnv cenv;
        cenv.x = x;
        std::vector<double> v0(n + 1), v1(n + 1);
        for (int j = 0; j <= n; ++j) {
            v0[j] = ast_eval(d0[j], env);
            v1[j] = ast_eval(d1[j], env);
        }
        for (int j = 0; j < n; ++j) cenv.jets[{0, j}] = v0[j];
        double r0 = v0[n] - ode.f0.eval(cenv);
        double r1 = v1[n] - ode.f1.eval(cenv);
        for (int j = 0; j < n; ++j) r1 -= df0[j].eval(cenv) * v1[j];
        max0 = std::max(max0, std::abs(r0));
        max1 = std::max(max1, std::abs(r1));
    }
    return {max0, max1};
}

/// Linear constant-coefficient order-0 structure of f0:  y^(n) = sum a_j
/// y^(j) + forcing(x); fails when f0 is nonlinear or has variable
/// coefficients on the jets.
struct LinearDecomposition {
    std::vector<Rational> char_coeffs;  // of y^(n) - sum a_j y^(j)
    CanonExpr forcing0;
};

inline LinearDecomposition linear_decompose(const PerturbedODE& ode) {
    std::vector<Rational> a(ode.order, Rational(0));
    CanonExpr forcing;
    for (const auto& [k, c] : ode.f0.terms()) {
        if (k.jet.empty()) {
            CanonExpr piece;
            TermKey nk = k;
            piece = CanonExpr::constant(c.constant());
            if (nk.xpow) piece = piece.mul(CanonExpr::x(nk.xpow));
            piece = piece.mul(CanonExpr::trig(nk.trig));
            forcing = forcing.add(piece);
            continue;
        }
        bool single = k.jet.size() == 1 && k.jet.begin()->second == 1 && k.xpow == 0 &&
                      k.trig.is_none();
        if (!single)
            throw ConfigError("order-0 equation is not linear with constant coefficients");
        a[static_cast<std::size_t>(k.jet.begin()->first.order)] = c.constant();
    }
    LinearDecomposition out;
    out.char_coeffs.resize(static_cast<std::size_t>(ode.order) + 1, Rational(0));
    out.char_coeffs[static_cast<std::size_t>(ode.order)] = Rational(1);
    for (int j = 0; j < ode.order; ++j) out.char_coeffs[static_cast<std::size_t>(j)] = -a[j];
    out.forcing0 = forcing;
    return out;
}

/// Full closed-form pipeline for a linear order-0 equation: solve the order-0
/// problem with its conditions, substitute into the eps-order forcing, solve
/// again, and verify.
inline SeriesSolution series_solve(const PerturbedODE& ode,
                                   const std::vector<InitialCondition>& ics) {
    if (static_cast<int>(ics.size()) != ode.order)
        throw ConfigError("need exactly one initial condition per derivative order");
    LinearDecomposition dec = linear_decompose(ode);
    ForcedLinearODE p0(dec.char_coeffs, dec.forcing0);
    std::vector<CanonExpr> modes = p0.homogeneous_modes();

    CanonExpr y0 = solve_forced(p0);
    std::set<std::string> free0;
    for (std::size_t i = 0; i < modes.size(); ++i) {
        std::string n = "K0_" + std::to_string(i);
        free0.insert(n);
        y0 = y0.add(modes[i].scaled_by_unknown(n));
    }
    std::map<std::string, std::optional<Rational>> constants;
    detail::fit_order(y0, ics, false, free0, constants);

    CanonExpr forcing1 = ode.f1.substitute_jet(0, 0, y0);
    ForcedLinearODE p1(dec.char_coeffs, forcing1);
    CanonExpr y1 = solve_forced(p1);
    std::set<std::string> free1;
    for (std::size_t i = 0; i < modes.size(); ++i) {
        std::string n = "K1_" + std::to_string(i);
        free1.insert(n);
        y1 = y1.add(modes[i].scaled_by_unknown(n));
    }
    detail::fit_order(y1, ics, true, free1, constants);

    SeriesSolution out = SeriesSolution::from_canonical(y0, y1);
    out.constants = std::move(constants);
    auto [r0, r1] = verify_series_symbolic(ode, out);
    if (!r0.is_zero() || !r1.is_zero()) throw Error("series solution failed self-audit");
    return out;
}

/// Exact trigonometric series over the base frequency sqrt(omega2): a finite
/// combination of cos(k*W*x) and sin(k*W*x) with rational coefficients. Keeps
/// the eps-order construction exact even when W itself is irrational.
class TrigSeries {
public:
    explicit TrigSeries(Rational omega2) : omega2_(std::move(omega2)) {
        if (!(Rational(0) < omega2_)) throw ConfigError("base frequency must be positive");
    }

    static TrigSeries constant(Rational omega2, const Rational& c) {
        TrigSeries s(std::move(omega2));
        s.set(0, false, c);
        return s;
    }
    static TrigSeries fundamental_sin(Rational omega2, const Rational& amplitude) {
        TrigSeries s(std::move(omega2));
        s.set(1, true, amplitude);
        return s;
    }
    static TrigSeries single_mode(Rational omega2, int mult, bool is_sin, const Rational& c) {
        TrigSeries s(std::move(omega2));
        if (!(mult == 0 && is_sin)) s.set(mult, is_sin, c);
        return s;
    }

    const Rational& omega2() const { return omega2_; }
    const std::map<std::pair<int, bool>, Rational>& modes() const { return modes_; }

    TrigSeries add(const TrigSeries& o) const {
        check_base(o);
        TrigSeries r = *this;
        for (const auto& [k, c] : o.modes_) r.bump(k.first, k.second, c);
        return r;
    }
    TrigSeries scale(const Rational& s) const {
        TrigSeries r(omega2_);
        if (s.is_zero()) return r;
        for (const auto& [k, c] : modes_) r.modes_[k] = c * s;
        return r;
    }
    TrigSeries mul(const TrigSeries& o) const {
        check_base(o);
        TrigSeries r(omega2_);
        for (const auto& [ka, ca] : modes_)
            for (const auto& [kb, cb] : o.modes_) {
                Rational c = ca * cb;
                // cos/sin product-to-sum on integer multiples of W
                int s = ka.first + kb.first;
                int d = ka.first - kb.first;
                const Rational half(1, 2);
                if (!ka.second && !kb.second) {
                    r.bump(std::abs(d), false, c * half);
                    r.bump(s, false, c * half);
                } else if (ka.second && kb.second) {
                    r.bump(std::abs(d), false, c * half);
                    r.bump(s, false, -(c * half));
                } else {
                    int sin_k = ka.second ? ka.first : kb.first;
                    int cos_k = ka.second ? kb.first : ka.first;
                    int dd = sin_k - cos_k;
                    r.bump(s, true, c * half);
                    if (dd > 0) r.bump(dd, true, c * half);
                    if (dd < 0) r.bump(-dd, true, -(c * half));
                }
            }
        return r;
    }
    TrigSeries pow(int e) const {
        TrigSeries r = constant(omega2_, Rational(1));
        for (int i = 0; i < e; ++i) r = r.mul(*this);
        return r;
    }

    TrigSeries second_derivative() const {
        TrigSeries r(omega2_);
        for (const auto& [k, c] : modes_) {
            if (k.first == 0) continue;
            Rational f = -omega2_ * Rational(static_cast<long>(k.first) * k.first);
            r.bump(k.first, k.second, c * f);
        }
        return r;
    }

    double eval(double x) const {
        double w = std::sqrt(omega2_.to_double());
        double acc = 0.0;
        for (const auto& [k, c] : modes_) {
            double arg = k.first * w * x;
            acc += c.to_double() * (k.second ? std::sin(arg) : std::cos(arg));
        }
        return acc;
    }

    Ast to_ast(const std::string& indep = "x") const {
        Ast w;
        if (auto root = omega2_.sqrt_exact())
            w = root->is_one() ? nullptr : ast::num(*root);
        else
            w = ast::sqrt(ast::num(omega2_));
        Ast sum;
        for (const auto& [k, c] : modes_) {
            Ast piece;
            if (k.first == 0) {
                piece = ast::num(c);
            } else {
                Ast arg = ast::var(indep);
                if (w) arg = ast::mul(w, arg);
                if (k.first != 1) arg = ast::mul(ast::num(static_cast<long>(k.first)), arg);
                Ast t = k.second ? ast::sin(arg) : ast::cos(arg);
                piece = c.is_one() ? t : ast::mul(ast::num(c), t);
            }
            sum = sum ? ast::add(sum, piece) : piece;
        }
        return sum ? sum : ast::num(0);
    }

private:
    void check_base(const TrigSeries& o) const {
        if (!(omega2_ == o.omega2_)) throw ConfigError("mixed base frequencies");
    }
    void set(int k, bool is_sin, const Rational& c) {
        if (!c.is_zero()) modes_[{k, is_sin}] = c;
    }
    void bump(int k, bool is_sin, const Rational& c) {
        if (is_sin && k == 0) return;  // sin(0) = 0
        auto it = modes_.find({k, is_sin});
        if (it == modes_.end()) {
            set(k, is_sin, c);
            return;
        }
        it->second += c;
        if (it->second.is_zero()) modes_.erase(it);
    }

    Rational omega2_;
    std::map<std::pair<int, bool>, Rational> modes_;
};

/// Order-eps series for  y'' = -omega2*y + eps*f1(y)  with y0 = A*sin(W*x):
/// the eps-order forcing is expanded over multiples of W and inverted mode by
/// mode. Resonant modes (multiple 1) are rejected.
inline std::pair<TrigSeries, TrigSeries> modal_series(const PerturbedODE& ode,
                                                      const Rational& amplitude) {
    if (ode.order != 2) throw ConfigError("modal construction requires a second-order ODE");
    LinearDecomposition dec = linear_decompose(ode);
    if (!dec.forcing0.is_zero() || !dec.char_coeffs[1].is_zero())
        throw ConfigError("order-0 equation must be y'' + omega2*y = 0");
    Rational omega2 = dec.char_coeffs[0];
    if (!(Rational(0) < omega2)) throw ConfigError("oscillatory family needs omega2 > 0");
    if (ode.f1.max_jet_order(0) > 0)
        throw ConfigError("eps-order right side must be polynomial in y");

    TrigSeries y0 = TrigSeries::fundamental_sin(omega2, amplitude);
    TrigSeries forcing(omega2);
    for (const auto& [k, c] : ode.f1.terms()) {
        if (k.xpow != 0 || !k.trig.is_none())
            throw ConfigError("eps-order right side must be polynomial in y");
        int deg = k.jet.empty() ? 0 : k.jet.begin()->second;
        forcing = forcing.add(y0.pow(deg).scale(c.constant()));
    }
    // particular mode inversion: y'' + omega2*y = c*trig(k*W*x)
    TrigSeries y1(omega2);
    for (const auto& [k, c] : forcing.modes()) {
        long mult = k.first;
        Rational denom = omega2 * Rational(1 - mult * mult);
        if (denom.is_zero()) throw UnsupportedRoots("resonant eps-order forcing mode");
        y1 = y1.add(TrigSeries::single_mode(omega2, k.first, k.second, c / denom));
    }
    return {y0, y1};
}

}  // namespace symmflow
