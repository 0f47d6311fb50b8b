#pragma once

#include <map>
#include <string>

#include "symmflow/errors.hpp"
#include "symmflow/rational.hpp"

namespace symmflow {

/// Affine form  c0 + sum_i c_i * u_i  over named unknowns with exact rational
/// coefficients. The map never stores zero coefficients, so structural
/// equality is semantic equality. Products are defined only when at most one
/// factor carries unknowns, which keeps determining systems linear.
class LinForm {
public:
    LinForm() = default;
    LinForm(Rational c) : constant_(std::move(c)) {}  // NOLINT: implicit by design
    static LinForm unknown(const std::string& name, Rational coeff = Rational(1)) {
        LinForm f;
        if (!coeff.is_zero()) f.terms_[name] = std::move(coeff);
        return f;
    }

    const Rational& constant() const { return constant_; }
    const std::map<std::string, Rational>& terms() const { return terms_; }

    bool is_zero() const { return constant_.is_zero() && terms_.empty(); }
    bool is_constant() const { return terms_.empty(); }
    bool has_unknowns() const { return !terms_.empty(); }

    Rational coeff_of(const std::string& name) const {
        auto it = terms_.find(name);
        return it == terms_.end() ? Rational(0) : it->second;
    }

    LinForm operator+(const LinForm& o) const {
        LinForm r(*this);
        r.constant_ += o.constant_;
        for (const auto& [n, c] : o.terms_) r.add_term(n, c);
        return r;
    }
    LinForm operator-(const LinForm& o) const { return *this + (-o); }
    LinForm operator-() const {
        LinForm r;
        r.constant_ = -constant_;
        for (const auto& [n, c] : terms_) r.terms_[n] = -c;
        return r;
    }
    LinForm scaled(const Rational& s) const {
        LinForm r;
        if (s.is_zero()) return r;
        r.constant_ = constant_ * s;
        for (const auto& [n, c] : terms_) r.terms_[n] = c * s;
        return r;
    }
    LinForm operator*(const LinForm& o) const {
        if (has_unknowns() && o.has_unknowns()) throw NonlinearUnknowns();
        return has_unknowns() ? scaled(o.constant_) : o.scaled(constant_);
    }

    bool operator==(const LinForm& o) const {
        return constant_ == o.constant_ && terms_ == o.terms_;
    }

    /// Replace every unknown present in `values`; unknowns not listed survive.
    LinForm substituted(const std::map<std::string, Rational>& values) const {
        LinForm r;
        r.constant_ = constant_;
        for (const auto& [n, c] : terms_) {
            auto it = values.find(n);
            if (it == values.end())
                r.add_term(n, c);
            else
                r.constant_ += c * it->second;
        }
        return r;
    }

    double eval(const std::map<std::string, double>& values) const {
        double acc = constant_.to_double();
        for (const auto& [n, c] : terms_) {
            auto it = values.find(n);
            if (it == values.end()) throw EvalError("no value for unknown '" + n + "'");
            acc += c.to_double() * it->second;
        }
        return acc;
    }

    std::string str() const {
        if (is_zero()) return "0";
        std::string out;
        bool first = true;
        if (!constant_.is_zero()) {
            out += constant_.str();
            first = false;
        }
        for (const auto& [n, c] : terms_) {
            if (first) {
                if (c == Rational(-1))
                    out += "-" + n;
                else if (c.is_one())
                    out += n;
                else
                    out += c.str() + "*" + n;
                first = false;
                continue;
            }
            out += c.is_negative() ? " - " : " + ";
            Rational a = c.abs();
            out += a.is_one() ? n : a.str() + "*" + n;
        }
        return out;
    }

private:
    void add_term(const std::string& n, const Rational& c) {
        auto it = terms_.find(n);
        if (it == terms_.end()) {
            if (!c.is_zero()) terms_[n] = c;
            return;
        }
        it->second += c;
        if (it->second.is_zero()) terms_.erase(it);
    }

    Rational constant_;
    std::map<std::string, Rational> terms_;
};

}  // namespace symmflow
