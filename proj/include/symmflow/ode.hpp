#pragma once

#include <string>

#include "symmflow/canon.hpp"
#include "symmflow/errors.hpp"

namespace symmflow {

/// Scalar perturbed ODE  y^(n) = f0 + eps*f1  with f0, f1 canonical in
/// (x, y, ..., y^(n-1)).
struct PerturbedODE {
    int order;
    CanonExpr f0;
    CanonExpr f1;

    PerturbedODE(int n, CanonExpr f0_, CanonExpr f1_)
        : order(n), f0(std::move(f0_)), f1(std::move(f1_)) {
        if (order < 1) throw ConfigError("ODE order must be at least 1");
        validate_side(f0, "f0");
        validate_side(f1, "f1");
    }

    PerturbedODE unperturbed() const { return {order, f0, CanonExpr::zero()}; }

    /// y^(n) - f0 - eps*f1
    CanonExpr relation() const {
        return CanonExpr::y(order).sub(f0).sub(f1.times_eps());
    }

    /// f0 + eps*f1
    CanonExpr rhs() const { return f0.add(f1.times_eps()); }

private:
    void validate_side(const CanonExpr& f, const std::string& which) const {
        if (f.contains_eps()) throw ConfigError(which + " must not contain eps");
        if (f.contains_unknowns()) throw ConfigError(which + " must not contain unknowns");
        if (f.max_jet_order(0) >= order)
            throw ConfigError(which + " depends on jet order >= ODE order");
        if (f.uses_family(1) || f.uses_family(2))
            throw ConfigError(which + " must be written in the y family");
    }
};

}  // namespace symmflow
