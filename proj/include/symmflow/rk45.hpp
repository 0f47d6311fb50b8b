#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "symmflow/canon.hpp"
#include "symmflow/errors.hpp"
#include "symmflow/ode.hpp"
#include "symmflow/rational.hpp"

namespace symmflow {

/// Embedded Runge-Kutta tableau stored as exact rationals so the structural
/// consistency conditions can be checked without rounding.
struct ButcherTableau {
    int stages = 0;
    std::vector<Rational> c;
    std::vector<std::vector<Rational>> a;
    std::vector<Rational> b;       // 5th-order weights
    std::vector<Rational> b_hat;   // embedded 4th-order weights
    std::vector<Rational> dense;   // extra dense-output weights

    bool row_sums_consistent() const {
        for (int i = 0; i < stages; ++i) {
            Rational s(0);
            for (const Rational& v : a[static_cast<std::size_t>(i)]) s += v;
            if (!(s == c[static_cast<std::size_t>(i)])) return false;
        }
        return true;
    }

    Rational weight_sum(const std::vector<Rational>& w) const {
        Rational s(0);
        for (const Rational& v : w) s += v;
        return s;
    }

    Rational weighted_node_sum(const std::vector<Rational>& w) const {
        Rational s(0);
        for (int i = 0; i < stages; ++i) s += w[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(i)];
        return s;
    }
};

/// Dormand-Prince 5(4) pair with the standard 4th-order dense output.
inline const ButcherTableau& dopri45() {
    static const ButcherTableau t = [] {
        ButcherTableau tb;
        tb.stages = 7;
        tb.c = {Rational(0),      Rational(1, 5), Rational(3, 10), Rational(4, 5),
                Rational(8, 9),   Rational(1),    Rational(1)};
        tb.a = {
            {},
            {Rational(1, 5)},
            {Rational(3, 40), Rational(9, 40)},
            {Rational(44, 45), Rational(-56, 15), Rational(32, 9)},
            {Rational(19372, 6561), Rational(-25360, 2187), Rational(64448, 6561),
             Rational(-212, 729)},
            {Rational(9017, 3168), Rational(-355, 33), Rational(46732, 5247),
             Rational(49, 176), Rational(-5103, 18656)},
            {Rational(35, 384), Rational(0), Rational(500, 1113), Rational(125, 192),
             Rational(-2187, 6784), Rational(11, 84)},
        };
        tb.b = {Rational(35, 384),     Rational(0),           Rational(500, 1113),
                Rational(125, 192),    Rational(-2187, 6784), Rational(11, 84),
                Rational(0)};
        tb.b_hat = {Rational(5179, 57600),    Rational(0),          Rational(7571, 16695),
                    Rational(393, 640),       Rational(-92097, 339200),
                    Rational(187, 2100),      Rational(1, 40)};
        tb.dense = {Rational(-12715105075L, 11282082432L),
                    Rational(0),
                    Rational(87487479700L, 32700410799L),
                    Rational(-10690763975L, 1880347072L),
                    Rational(701980252875L, 199316789632L),
                    Rational(-1453857185L, 822651844L),
                    Rational(69997945L, 29380423L)};
        return tb;
    }();
    return t;
}

using OdeRhs = std::function<void(double x, const std::vector<double>& y, std::vector<double>& dy)>;

/// Compile a perturbed ODE into a first-order system right side with eps
/// bound; state is (y, y', ..., y^(n-1)).
inline OdeRhs make_rhs(const PerturbedODE& ode, double eps) {
    struct FlatTerm {
        double coeff;
        int xpow;
        TrigKind trig;
        int freq;
        std::vector<std::pair<int, int>> jets;  // (order, exponent)
        int epspow;
    };
    auto flatten = [](const CanonExpr& e) {
        std::vector<FlatTerm> out;
        for (const auto& [k, c] : e.terms()) {
            if (!c.is_constant()) throw ConfigError("ODE right side contains unknowns");
            FlatTerm t;
            t.coeff = c.constant().to_double();
            t.xpow = k.xpow;
            t.trig = k.trig.kind;
            t.freq = k.trig.freq;
            t.epspow = k.epspow;
            for (const auto& [v, ex] : k.jet) {
                if (v.family != 0) throw ConfigError("ODE right side must use the y family");
                t.jets.emplace_back(v.order, ex);
            }
            out.push_back(std::move(t));
        }
        return out;
    };
    auto f0 = flatten(ode.f0);
    auto f1 = flatten(ode.f1);
    int n = ode.order;
    auto eval_terms = [](const std::vector<FlatTerm>& terms, double x,
                         const std::vector<double>& y) {
        double acc = 0.0;
        for (const auto& t : terms) {
            double v = t.coeff;
            if (t.xpow) v *= std::pow(x, t.xpow);
            if (t.trig == TrigKind::sin) v *= std::sin(t.freq * x);
            if (t.trig == TrigKind::cos) v *= std::cos(t.freq * x);
            for (const auto& [o, e] : t.jets)
                v *= e == 1 ? y[static_cast<std::size_t>(o)]
                            : std::pow(y[static_cast<std::size_t>(o)], e);
            acc += v;
        }
        return acc;
    };
    return [f0, f1, eps, n, eval_terms](double x, const std::vector<double>& y,
                                        std::vector<double>& dy) {
        for (int j = 0; j + 1 < n; ++j)
            dy[static_cast<std::size_t>(j)] = y[static_cast<std::size_t>(j) + 1];
        dy[static_cast<std::size_t>(n) - 1] = eval_terms(f0, x, y) + eps * eval_terms(f1, x, y);
    };
}

struct IvpSpec {
    OdeRhs rhs;
    std::vector<double> y0;
    double x0 = 0.0;
    double x1 = 10.0;
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    std::optional<double> fixed_step;  // disables adaptivity when set

    static IvpSpec for_ode(const PerturbedODE& ode, double eps, std::vector<double> init,
                           double x0 = 0.0, double x1 = 10.0, double tol = 1e-10) {
        IvpSpec s;
        s.rhs = make_rhs(ode, eps);
        s.y0 = std::move(init);
        s.x0 = x0;
        s.x1 = x1;
        s.abs_tol = tol;
        s.rel_tol = tol;
        return s;
    }
};

/// One accepted step with its dense-output polynomial coefficients.
struct DenseSegment {
    double x0, h;
    std::vector<double> r1, r2, r3, r4, r5;

    std::vector<double> eval(double x) const {
        double th = (x - x0) / h;
        double th1 = 1.0 - th;
        std::vector<double> out(r1.size());
        for (std::size_t i = 0; i < r1.size(); ++i)
            out[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
        return out;
    }
};

struct Trajectory {
    std::vector<double> xs;
    std::vector<std::vector<double>> states;
    std::vector<DenseSegment> segments;
    long accepted = 0;
    long rejected = 0;

    /// Dense-output sample; x must lie inside the integration span.
    std::vector<double> sample(double x) const {
        if (segments.empty()) throw IntegrationError("empty trajectory");
        if (x <= segments.front().x0) return states.front();
        auto it = std::upper_bound(segments.begin(), segments.end(), x,
                                   [](double v, const DenseSegment& s) { return v < s.x0; });
        const DenseSegment& seg = it == segments.begin() ? segments.front() : *(it - 1);
        if (x > seg.x0 + seg.h * (1.0 + 1e-12)) return states.back();
        return seg.eval(x);
    }
};

/// Adaptive Dormand-Prince 5(4) with FSAL, PI-free step control (safety 0.9,
/// growth clamped to [0.2, 5]) and 4th-order dense output.
inline Trajectory integrate(const IvpSpec& ivp) {
    const ButcherTableau& tb = dopri45();
    const int s = tb.stages;
    const std::size_t dim = ivp.y0.size();
    std::vector<std::vector<double>> a(static_cast<std::size_t>(s));
    for (int i = 0; i < s; ++i)
        for (const Rational& v : tb.a[static_cast<std::size_t>(i)])
            a[static_cast<std::size_t>(i)].push_back(v.to_double());
    std::vector<double> c, b, bh, d;
    for (auto& v : tb.c) c.push_back(v.to_double());
    for (auto& v : tb.b) b.push_back(v.to_double());
    for (auto& v : tb.b_hat) bh.push_back(v.to_double());
    for (auto& v : tb.dense) d.push_back(v.to_double());

    Trajectory traj;
    double x = ivp.x0;
    std::vector<double> y = ivp.y0;
    traj.xs.push_back(x);
    traj.states.push_back(y);

    double span = ivp.x1 - ivp.x0;
    if (span <= 0.0) throw ConfigError("degenerate integration span");
    double h = ivp.fixed_step ? *ivp.fixed_step : 0.01 * span;

    std::vector<std::vector<double>> k(static_cast<std::size_t>(s),
                                       std::vector<double>(dim));
    std::vector<double> ytmp(dim), y5(dim), err(dim);
    ivp.rhs(x, y, k[0]);

    const double hmin = 1e-14 * std::max(1.0, std::abs(span));
    while (x < ivp.x1 - 1e-14 * std::abs(span)) {
        if (h < hmin) throw StepSizeUnderflow(x);
        h = std::min(h, ivp.x1 - x);
        for (int i = 1; i < s; ++i) {
            for (std::size_t j = 0; j < dim; ++j) {
                double acc = 0.0;
                for (int l = 0; l < i; ++l)
                    acc += a[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)] *
                           k[static_cast<std::size_t>(l)][j];
                ytmp[j] = y[j] + h * acc;
            }
            ivp.rhs(x + c[static_cast<std::size_t>(i)] * h, ytmp, k[static_cast<std::size_t>(i)]);
        }
        double err_norm = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            double acc5 = 0.0, acc4 = 0.0;
            for (int i = 0; i < s; ++i) {
                acc5 += b[static_cast<std::size_t>(i)] * k[static_cast<std::size_t>(i)][j];
                acc4 += bh[static_cast<std::size_t>(i)] * k[static_cast<std::size_t>(i)][j];
            }
            y5[j] = y[j] + h * acc5;
            err[j] = h * (acc5 - acc4);
            double scale = ivp.abs_tol + ivp.rel_tol * std::max(std::abs(y[j]), std::abs(y5[j]));
            double e = err[j] / scale;
            err_norm += e * e;
        }
        err_norm = std::sqrt(err_norm / static_cast<double>(dim));
        for (std::size_t j = 0; j < dim; ++j)
            if (!std::isfinite(y5[j])) throw NonFiniteState(x);

        bool accept = ivp.fixed_step.has_value() || err_norm <= 1.0;
        if (!accept) {
            ++traj.rejected;
            double factor = 0.9 * std::pow(err_norm, -0.2);
            h *= std::clamp(factor, 0.2, 5.0);
            continue;
        }

        // k7 = f(x+h, y5) for FSAL and the dense polynomial
        ivp.rhs(x + h, y5, k[static_cast<std::size_t>(s) - 1]);

        DenseSegment seg;
        seg.x0 = x;
        seg.h = h;
        seg.r1.resize(dim);
        seg.r2.resize(dim);
        seg.r3.resize(dim);
        seg.r4.resize(dim);
        seg.r5.resize(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            double dy = y5[j] - y[j];
            double bspl = h * k[0][j] - dy;
            seg.r1[j] = y[j];
            seg.r2[j] = dy;
            seg.r3[j] = bspl;
            seg.r4[j] = dy - h * k[static_cast<std::size_t>(s) - 1][j] - bspl;
            double acc = 0.0;
            for (int i = 0; i < s; ++i)
                acc += d[static_cast<std::size_t>(i)] * k[static_cast<std::size_t>(i)][j];
            seg.r5[j] = h * acc;
        }
        traj.segments.push_back(std::move(seg));

        x += h;
        y = y5;
        k[0] = k[static_cast<std::size_t>(s) - 1];
        traj.xs.push_back(x);
        traj.states.push_back(y);
        ++traj.accepted;

        if (!ivp.fixed_step) {
            double factor = err_norm == 0.0 ? 5.0 : 0.9 * std::pow(err_norm, -0.2);
            h *= std::clamp(factor, 0.2, 5.0);
        }
    }
    return traj;
}

}  // namespace symmflow
