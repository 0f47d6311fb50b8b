#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "symmflow/canon.hpp"
#include "symmflow/errors.hpp"
#include "symmflow/linform.hpp"
#include "symmflow/rational.hpp"

namespace symmflow {

/// Linear system over the rationals; each row states LinForm == 0, i.e. the
/// affine constant is moved to the right-hand side during elimination.
struct LinearSystem {
    std::vector<std::string> unknowns;  // column order
    std::vector<LinForm> rows;          // deduplicated

    void add_row(const LinForm& f) {
        if (f.is_zero()) return;
        if (std::find(rows.begin(), rows.end(), f) != rows.end()) return;
        rows.push_back(f);
        for (const auto& [n, c] : f.terms())
            if (std::find(unknowns.begin(), unknowns.end(), n) == unknowns.end())
                unknowns.push_back(n);
    }

    std::string str() const {
        std::string out;
        for (const auto& r : rows) out += r.str() + " = 0\n";
        return out;
    }
};

struct SolutionSpace {
    std::map<std::string, Rational> particular;             // zero vector when homogeneous
    std::vector<std::map<std::string, Rational>> nullspace;  // one vector per free unknown
    std::vector<std::string> forced_zero;                    // unknowns pinned to 0
    int rank = 0;

    bool unique() const { return nullspace.empty(); }
};

/// One equation per monomial key: the affine coefficient of every distinct
/// (xpow, trig, jet, epspow) monomial must vanish.
inline LinearSystem split(const CanonExpr& e,
                          const std::vector<std::string>& declared_order = {}) {
    LinearSystem sys;
    sys.unknowns = declared_order;
    for (const auto& [k, c] : e.terms()) sys.add_row(c);
    return sys;
}

/// Exact Gauss-Jordan elimination. Pivots are chosen per column by the
/// smallest |numerator|*denominator entry to limit coefficient growth. Free
/// unknowns keep declaration order; each nullspace vector sets one of them
/// to 1. Throws InconsistentSystem with the offending reduced row.
inline SolutionSpace solve(const LinearSystem& sys) {
    const std::size_t n = sys.unknowns.size();
    const std::size_t m = sys.rows.size();
    std::map<std::string, std::size_t> col;
    for (std::size_t j = 0; j < n; ++j) col[sys.unknowns[j]] = j;

    // matrix rows: coefficients | rhs
    std::vector<std::vector<Rational>> a(m, std::vector<Rational>(n + 1, Rational(0)));
    for (std::size_t i = 0; i < m; ++i) {
        for (const auto& [name, c] : sys.rows[i].terms()) a[i][col[name]] = c;
        a[i][n] = -sys.rows[i].constant();
    }

    std::vector<bool> row_used(m, false);
    std::vector<std::optional<std::size_t>> pivot_row(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < m; ++i) {
            if (row_used[i] || a[i][j].is_zero()) continue;
            if (!best || a[i][j].size_metric() < a[*best][j].size_metric()) best = i;
        }
        if (!best) continue;
        std::size_t p = *best;
        row_used[p] = true;
        pivot_row[j] = p;
        Rational inv = a[p][j].inverse();
        for (std::size_t k = j; k <= n; ++k) a[p][k] = a[p][k] * inv;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == p || a[i][j].is_zero()) continue;
            Rational f = a[i][j];
            for (std::size_t k = j; k <= n; ++k) a[i][k] = a[i][k] - f * a[p][k];
        }
    }

    for (std::size_t i = 0; i < m; ++i) {
        if (row_used[i]) continue;
        bool all_zero = std::all_of(a[i].begin(), a[i].end() - 1,
                                    [](const Rational& r) { return r.is_zero(); });
        if (all_zero && !a[i][n].is_zero())
            throw InconsistentSystem("0 = " + a[i][n].str());
    }

    SolutionSpace out;
    std::vector<std::size_t> free_cols;
    for (std::size_t j = 0; j < n; ++j) {
        if (pivot_row[j])
            ++out.rank;
        else
            free_cols.push_back(j);
    }

    for (std::size_t j = 0; j < n; ++j) {
        Rational v = pivot_row[j] ? a[*pivot_row[j]][n] : Rational(0);
        if (!v.is_zero()) out.particular[sys.unknowns[j]] = v;
    }

    for (std::size_t f : free_cols) {
        std::map<std::string, Rational> vec;
        vec[sys.unknowns[f]] = Rational(1);
        for (std::size_t j = 0; j < n; ++j) {
            if (!pivot_row[j]) continue;
            Rational v = -a[*pivot_row[j]][f];
            if (!v.is_zero()) vec[sys.unknowns[j]] = v;
        }
        out.nullspace.push_back(std::move(vec));
    }

    for (std::size_t j = 0; j < n; ++j) {
        const std::string& name = sys.unknowns[j];
        if (out.particular.count(name)) continue;
        bool zero_everywhere = true;
        for (const auto& v : out.nullspace)
            if (v.count(name)) {
                zero_everywhere = false;
                break;
            }
        if (zero_everywhere) out.forced_zero.push_back(name);
    }
    return out;
}

/// Reduced row echelon form of a set of coordinate vectors; columns follow
/// `order`. Rows come back sorted by leading column, scaled to leading 1.
inline std::vector<std::map<std::string, Rational>> rref_vectors(
    std::vector<std::map<std::string, Rational>> vecs, const std::vector<std::string>& order) {
    std::map<std::string, std::size_t> col;
    for (std::size_t j = 0; j < order.size(); ++j) col[order[j]] = j;
    std::vector<std::vector<Rational>> a(vecs.size(),
                                         std::vector<Rational>(order.size(), Rational(0)));
    for (std::size_t i = 0; i < vecs.size(); ++i)
        for (const auto& [n, c] : vecs[i]) a[i][col.at(n)] = c;

    std::size_t r = 0;
    for (std::size_t j = 0; j < order.size() && r < a.size(); ++j) {
        std::size_t p = r;
        while (p < a.size() && a[p][j].is_zero()) ++p;
        if (p == a.size()) continue;
        std::swap(a[r], a[p]);
        Rational inv = a[r][j].inverse();
        for (auto& v : a[r]) v = v * inv;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (i == r || a[i][j].is_zero()) continue;
            Rational f = a[i][j];
            for (std::size_t k = 0; k < order.size(); ++k) a[i][k] = a[i][k] - f * a[r][k];
        }
        ++r;
    }
    std::vector<std::map<std::string, Rational>> out;
    for (std::size_t i = 0; i < r; ++i) {
        std::map<std::string, Rational> vec;
        for (std::size_t j = 0; j < order.size(); ++j)
            if (!a[i][j].is_zero()) vec[order[j]] = a[i][j];
        out.push_back(std::move(vec));
    }
    return out;
}

/// Membership of `target` in the rational span of `basis`, with the
/// combination coefficients when it lies inside.
inline std::optional<std::vector<Rational>> span_coordinates(
    const std::vector<std::map<std::string, Rational>>& basis,
    const std::map<std::string, Rational>& target) {
    LinearSystem sys;
    std::set<std::string> coords;
    for (const auto& v : basis)
        for (const auto& [n, c] : v) coords.insert(n);
    for (const auto& [n, c] : target) coords.insert(n);
    for (std::size_t i = 0; i < basis.size(); ++i)
        sys.unknowns.push_back("t" + std::to_string(i));
    for (const auto& name : coords) {
        LinForm row;
        for (std::size_t i = 0; i < basis.size(); ++i) {
            auto it = basis[i].find(name);
            if (it != basis[i].end())
                row = row + LinForm::unknown("t" + std::to_string(i), it->second);
        }
        auto t = target.find(name);
        if (t != target.end()) row = row + LinForm(-t->second);
        sys.add_row(row);
    }
    try {
        SolutionSpace s = solve(sys);
        std::vector<Rational> coeffs;
        for (std::size_t i = 0; i < basis.size(); ++i) {
            auto it = s.particular.find("t" + std::to_string(i));
            coeffs.push_back(it == s.particular.end() ? Rational(0) : it->second);
        }
        return coeffs;
    } catch (const InconsistentSystem&) {
        return std::nullopt;
    }
}

}  // namespace symmflow
