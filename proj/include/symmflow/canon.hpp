#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "symmflow/errors.hpp"
#include "symmflow/linform.hpp"
#include "symmflow/rational.hpp"

namespace symmflow {

enum class TrigKind { none = 0, sin = 1, cos = 2 };

/// sin(m*x) / cos(m*x) factor; freq == 0 iff kind == none.
struct Trig {
    TrigKind kind = TrigKind::none;
    int freq = 0;

    static Trig none() { return {}; }
    static Trig sin(int m) { return {TrigKind::sin, m}; }
    static Trig cos(int m) { return {TrigKind::cos, m}; }

    bool is_none() const { return kind == TrigKind::none; }
    auto operator<=>(const Trig&) const = default;
};

/// Jet coordinate: family 0 is y, families 1 and 2 are the series components
/// y0 and y1. order 0 is the dependent variable itself.
struct JetVar {
    int family = 0;
    int order = 0;
    auto operator<=>(const JetVar&) const = default;
};

inline std::string jet_family_name(int family) {
    switch (family) {
        case 0: return "y";
        case 1: return "y0";
        case 2: return "y1";
        default: throw Error("unknown jet family");
    }
}

inline std::string jet_name(const JetVar& v) {
    std::string base = jet_family_name(v.family);
    if (v.order <= 3) return base + std::string(static_cast<std::size_t>(v.order), '\'');
    return base + "^(" + std::to_string(v.order) + ")";
}

/// Monomial shape of a term: x^k * trig * prod_j jet_j^e_j * eps^e.
/// Ordered by (epspow, jet, trig, xpow); that order also fixes printing.
struct TermKey {
    int epspow = 0;
    std::map<JetVar, int> jet;  // no zero exponents
    Trig trig;
    int xpow = 0;

    bool operator==(const TermKey&) const = default;
    bool operator<(const TermKey& o) const {
        if (epspow != o.epspow) return epspow < o.epspow;
        if (jet != o.jet)
            return std::lexicographical_compare(jet.begin(), jet.end(), o.jet.begin(),
                                                o.jet.end());
        if (trig != o.trig) return trig < o.trig;
        return xpow < o.xpow;
    }
};

/// Numeric evaluation point for canonical expressions.
struct CanonEnv {
    double x = 0.0;
    double eps = 0.0;
    std::map<std::pair<int, int>, double> jets;      // (family, order) -> value
    std::map<std::string, double> unknowns;

    double jet(int family, int order) const {
        auto it = jets.find({family, order});
        if (it == jets.end())
            throw EvalError("no value for " + jet_name({family, order}));
        return it->second;
    }
};

namespace detail {

/// Product-to-sum expansion of a trig * trig product.
inline std::vector<std::pair<Rational, Trig>> trig_product(const Trig& a, const Trig& b) {
    if (a.is_none()) return {{Rational(1), b}};
    if (b.is_none()) return {{Rational(1), a}};
    const Rational half(1, 2);
    std::vector<std::pair<Rational, Trig>> out;
    int sum = a.freq + b.freq;
    int dif = a.freq - b.freq;
    auto sin_of = [](int m) -> std::pair<Rational, Trig> {
        if (m == 0) return {Rational(0), Trig::none()};
        if (m < 0) return {Rational(-1), Trig::sin(-m)};
        return {Rational(1), Trig::sin(m)};
    };
    auto cos_of = [](int m) -> std::pair<Rational, Trig> {
        if (m == 0) return {Rational(1), Trig::none()};
        return {Rational(1), Trig::cos(m < 0 ? -m : m)};
    };
    auto push = [&out](const Rational& c, std::pair<Rational, Trig> t) {
        Rational v = c * t.first;
        if (!v.is_zero()) out.emplace_back(v, t.second);
    };
    if (a.kind == TrigKind::sin && b.kind == TrigKind::sin) {
        push(half, cos_of(dif));
        push(-half, cos_of(sum));
    } else if (a.kind == TrigKind::cos && b.kind == TrigKind::cos) {
        push(half, cos_of(dif));
        push(half, cos_of(sum));
    } else if (a.kind == TrigKind::sin && b.kind == TrigKind::cos) {
        push(half, sin_of(sum));
        push(half, sin_of(dif));
    } else {  // cos * sin
        push(half, sin_of(sum));
        push(-half, sin_of(-dif));
    }
    return out;
}

}  // namespace detail

inline std::string term_key_str(const TermKey& k) {
    std::vector<std::string> f;
    if (k.xpow == 1) f.push_back("x");
    if (k.xpow > 1) f.push_back("x^" + std::to_string(k.xpow));
    if (k.trig.kind != TrigKind::none) {
        std::string fn = k.trig.kind == TrigKind::sin ? "sin" : "cos";
        std::string arg = k.trig.freq == 1 ? "x" : std::to_string(k.trig.freq) + "*x";
        f.push_back(fn + "(" + arg + ")");
    }
    for (const auto& [v, e] : k.jet) {
        std::string j = jet_name(v);
        if (e > 1) j += "^" + std::to_string(e);
        f.push_back(j);
    }
    if (k.epspow == 1) f.push_back("eps");
    std::string out;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (i) out += "*";
        out += f[i];
    }
    return out;
}

/// Canonical multivariate expression: a finite sum of monomials with affine
/// coefficients, closed under the ring operations, differentiation and jet
/// substitution. eps is truncated at second order throughout.
class CanonExpr {
public:
    CanonExpr() = default;

    static CanonExpr zero() { return {}; }
    static CanonExpr constant(const Rational& r) {
        CanonExpr e;
        e.add_term(TermKey{}, LinForm(r));
        return e;
    }
    static CanonExpr one() { return constant(Rational(1)); }
    static CanonExpr unknown(const std::string& name) {
        CanonExpr e;
        e.add_term(TermKey{}, LinForm::unknown(name));
        return e;
    }
    static CanonExpr coeff(const LinForm& f) {
        CanonExpr e;
        e.add_term(TermKey{}, f);
        return e;
    }
    static CanonExpr x(int pow = 1) {
        CanonExpr e;
        TermKey k;
        k.xpow = pow;
        e.add_term(k, LinForm(Rational(1)));
        return e;
    }
    static CanonExpr jet(int family, int order, int exponent = 1) {
        CanonExpr e;
        TermKey k;
        if (exponent != 0) k.jet[{family, order}] = exponent;
        e.add_term(k, LinForm(Rational(1)));
        return e;
    }
    static CanonExpr y(int order = 0) { return jet(0, order); }
    static CanonExpr eps() {
        CanonExpr e;
        TermKey k;
        k.epspow = 1;
        e.add_term(k, LinForm(Rational(1)));
        return e;
    }
    static CanonExpr trig(const Trig& t) {
        if (t.is_none()) return one();
        CanonExpr e;
        TermKey k;
        k.trig = t;
        e.add_term(k, LinForm(Rational(1)));
        return e;
    }
    static CanonExpr sin(int m) { return trig(Trig::sin(m)); }
    static CanonExpr cos(int m) { return trig(Trig::cos(m)); }

    const std::map<TermKey, LinForm>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    bool operator==(const CanonExpr& o) const { return terms_ == o.terms_; }

    CanonExpr add(const CanonExpr& o) const {
        CanonExpr r(*this);
        for (const auto& [k, c] : o.terms_) r.add_term(k, c);
        return r;
    }
    CanonExpr sub(const CanonExpr& o) const { return add(o.neg()); }
    CanonExpr neg() const {
        CanonExpr r;
        for (const auto& [k, c] : terms_) r.terms_[k] = -c;
        return r;
    }
    CanonExpr scale(const Rational& s) const {
        CanonExpr r;
        if (s.is_zero()) return r;
        for (const auto& [k, c] : terms_) r.terms_[k] = c.scaled(s);
        return r;
    }

    CanonExpr mul(const CanonExpr& o) const {
        CanonExpr r;
        for (const auto& [ka, ca] : terms_) {
            for (const auto& [kb, cb] : o.terms_) {
                int ep = ka.epspow + kb.epspow;
                if (ep >= 2) continue;  // O(eps^2) truncation
                LinForm c = ca * cb;
                if (c.is_zero()) continue;
                TermKey base;
                base.epspow = ep;
                base.xpow = ka.xpow + kb.xpow;
                base.jet = ka.jet;
                for (const auto& [v, e] : kb.jet) {
                    auto it = base.jet.find(v);
                    if (it == base.jet.end())
                        base.jet[v] = e;
                    else
                        it->second += e;
                }
                for (const auto& [factor, t] : detail::trig_product(ka.trig, kb.trig)) {
                    TermKey k = base;
                    k.trig = t;
                    r.add_term(k, c.scaled(factor));
                }
            }
        }
        return r;
    }

    CanonExpr pow(int e) const {
        if (e < 0) throw Error("negative power of non-constant expression");
        CanonExpr r = one();
        for (int i = 0; i < e; ++i) r = r.mul(*this);
        return r;
    }

    /// Multiply every (purely rational) coefficient by a fresh unknown.
    CanonExpr scaled_by_unknown(const std::string& name) const {
        CanonExpr r;
        for (const auto& [k, c] : terms_) {
            if (c.has_unknowns()) throw NonlinearUnknowns();
            r.terms_[k] = LinForm::unknown(name, c.constant());
        }
        return r;
    }

    /// eps * (*this); the argument must be eps-free.
    CanonExpr times_eps() const {
        CanonExpr r;
        for (const auto& [k, c] : terms_) {
            if (k.epspow != 0) throw Error("times_eps on eps-bearing expression");
            TermKey nk = k;
            nk.epspow = 1;
            r.terms_[nk] = c;
        }
        return r;
    }

    /// Coefficient of eps^e, returned eps-free.
    CanonExpr eps_part(int e) const {
        CanonExpr r;
        for (const auto& [k, c] : terms_) {
            if (k.epspow != e) continue;
            TermKey nk = k;
            nk.epspow = 0;
            r.terms_[nk] = c;
        }
        return r;
    }

    bool contains_eps() const {
        return std::any_of(terms_.begin(), terms_.end(),
                           [](const auto& t) { return t.first.epspow != 0; });
    }
    bool contains_unknowns() const {
        return std::any_of(terms_.begin(), terms_.end(),
                           [](const auto& t) { return t.second.has_unknowns(); });
    }
    std::set<std::string> unknown_names() const {
        std::set<std::string> names;
        for (const auto& [k, c] : terms_)
            for (const auto& [n, r] : c.terms()) names.insert(n);
        return names;
    }

    /// Highest jet order of the given family, or -1 when absent.
    int max_jet_order(int family = 0) const {
        int m = -1;
        for (const auto& [k, c] : terms_)
            for (const auto& [v, e] : k.jet)
                if (v.family == family) m = std::max(m, v.order);
        return m;
    }

    bool uses_family(int family) const { return max_jet_order(family) >= 0; }

    CanonExpr partial_x() const {
        CanonExpr r;
        for (const auto& [k, c] : terms_) {
            if (k.xpow > 0) {
                TermKey nk = k;
                nk.xpow -= 1;
                r.add_term(nk, c.scaled(Rational(k.xpow)));
            }
            if (k.trig.kind == TrigKind::sin) {
                TermKey nk = k;
                nk.trig = Trig::cos(k.trig.freq);
                r.add_term(nk, c.scaled(Rational(k.trig.freq)));
            } else if (k.trig.kind == TrigKind::cos) {
                TermKey nk = k;
                nk.trig = Trig::sin(k.trig.freq);
                r.add_term(nk, c.scaled(Rational(-k.trig.freq)));
            }
        }
        return r;
    }

    CanonExpr partial_jet(const JetVar& v) const {
        CanonExpr r;
        for (const auto& [k, c] : terms_) {
            auto it = k.jet.find(v);
            if (it == k.jet.end()) continue;
            TermKey nk = k;
            int e = it->second;
            if (e == 1)
                nk.jet.erase(v);
            else
                nk.jet[v] = e - 1;
            r.add_term(nk, c.scaled(Rational(e)));
        }
        return r;
    }

    /// Total derivative in x: D = d/dx + sum over jets of jet' * d/d(jet).
    CanonExpr total_derivative() const {
        CanonExpr r = partial_x();
        std::set<JetVar> vars;
        for (const auto& [k, c] : terms_)
            for (const auto& [v, e] : k.jet) vars.insert(v);
        for (const JetVar& v : vars)
            r = r.add(jet(v.family, v.order + 1).mul(partial_jet(v)));
        return r;
    }

    CanonExpr nth_total_derivative(int n) const {
        CanonExpr r(*this);
        for (int i = 0; i < n; ++i) r = r.total_derivative();
        return r;
    }

    /// Replace jet (family, order) by r and every higher-order jet of the
    /// family by the matching total derivative of r, recursively, until no
    /// jet of the family with order >= `order` remains.
    CanonExpr substitute_jet(int family, int order, const CanonExpr& replacement) const {
        if (replacement.max_jet_order(family) >= order)
            throw Error("replacement depends on substituted jet orders");
        int top = max_jet_order(family);
        if (top < order) return *this;
        std::map<int, CanonExpr> rep;
        rep[order] = replacement;
        for (int o = order + 1; o <= top; ++o) {
            CanonExpr d = rep[o - 1].total_derivative();
            rep[o] = d.replace_orders(family, rep);
        }
        return replace_orders(family, rep);
    }

    /// Substitute exact rational values for unknowns appearing in coefficients.
    CanonExpr substituted_unknowns(const std::map<std::string, Rational>& values) const {
        CanonExpr r;
        for (const auto& [k, c] : terms_) r.add_term(k, c.substituted(values));
        return r;
    }

    double eval(const CanonEnv& env) const {
        double acc = 0.0;
        for (const auto& [k, c] : terms_) {
            double t = c.eval(env.unknowns);
            if (k.epspow == 1) t *= env.eps;
            if (k.xpow != 0) t *= std::pow(env.x, k.xpow);
            if (k.trig.kind == TrigKind::sin) t *= std::sin(k.trig.freq * env.x);
            if (k.trig.kind == TrigKind::cos) t *= std::cos(k.trig.freq * env.x);
            for (const auto& [v, e] : k.jet)
                t *= std::pow(env.jet(v.family, v.order), e);
            acc += t;
        }
        return acc;
    }

    std::string str() const {
        if (terms_.empty()) return "0";
        std::string out;
        bool first = true;
        for (const auto& [k, c] : terms_) {
            std::string factors = term_key_str(k);
            bool negate = false;
            std::string coeff;
            if (c.is_constant()) {
                Rational v = c.constant();
                if (!first && v.is_negative()) {
                    negate = true;
                    v = -v;
                }
                if (!v.is_one() || factors.empty()) coeff = v.str();
            } else {
                coeff = "(" + c.str() + ")";
            }
            std::string body = coeff;
            if (!factors.empty()) {
                if (!body.empty()) body += "*";
                body += factors;
            }
            if (first) {
                out = body;
                first = false;
            } else {
                out += negate ? " - " : " + ";
                out += body;
            }
        }
        return out;
    }

private:
    void add_term(const TermKey& k, const LinForm& c) {
        if (c.is_zero()) return;
        auto it = terms_.find(k);
        if (it == terms_.end()) {
            terms_[k] = c;
            return;
        }
        LinForm s = it->second + c;
        if (s.is_zero())
            terms_.erase(it);
        else
            it->second = s;
    }

    CanonExpr replace_orders(int family, const std::map<int, CanonExpr>& rep) const {
        int lowest = rep.empty() ? 0 : rep.begin()->first;
        CanonExpr out;
        for (const auto& [k, c] : terms_) {
            TermKey low = k;
            std::vector<std::pair<int, int>> high;  // (order, exponent)
            for (auto it = low.jet.begin(); it != low.jet.end();) {
                if (it->first.family == family && it->first.order >= lowest) {
                    high.emplace_back(it->first.order, it->second);
                    it = low.jet.erase(it);
                } else {
                    ++it;
                }
            }
            CanonExpr piece;
            piece.add_term(low, c);
            for (const auto& [o, e] : high) piece = piece.mul(rep.at(o).pow(e));
            out = out.add(piece);
        }
        return out;
    }

    std::map<TermKey, LinForm> terms_;
};

}  // namespace symmflow
