#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "symmflow/ast.hpp"
#include "symmflow/errors.hpp"
#include "symmflow/grid.hpp"
#include "symmflow/rk45.hpp"

namespace symmflow {

namespace detail {

inline std::string full_precision(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// Pointwise comparison of a closed-form solution against dense integrator
/// output on a uniform grid.
struct ComparisonReport {
    std::vector<double> grid;
    std::vector<double> approx;
    std::vector<double> numeric;
    double max_abs_error = 0.0;
    double error_location = 0.0;

    std::string to_csv() const {
        std::string out = "x,approx,numeric,abs_error\n";
        for (std::size_t i = 0; i < grid.size(); ++i) {
            out += detail::full_precision(grid[i]);
            out += ',';
            out += detail::full_precision(approx[i]);
            out += ',';
            out += detail::full_precision(numeric[i]);
            out += ',';
            out += detail::full_precision(std::abs(approx[i] - numeric[i]));
            out += '\n';
        }
        return out;
    }
};

/// Evaluates the closed form (a tree over the independent variable and eps)
/// against the trajectory's dense output.
inline ComparisonReport compare(const Trajectory& traj, const Ast& closed, double eps,
                                const GridSpec& grid, const AstEnv& extra = {}) {
    ComparisonReport rep;
    rep.grid = grid.points();
    rep.approx.reserve(rep.grid.size());
    rep.numeric.reserve(rep.grid.size());
    for (double x : rep.grid) {
        AstEnv env = extra;
        env["x"] = x;
        env["z"] = x;
        env["eps"] = eps;
        double av = ast_eval(closed, env);
        double nv = traj.sample(x)[0];
        rep.approx.push_back(av);
        rep.numeric.push_back(nv);
        double e = std::abs(av - nv);
        if (e > rep.max_abs_error) {
            rep.max_abs_error = e;
            rep.error_location = x;
        }
    }
    return rep;
}

struct ScalingResult {
    double exponent = 0.0;
    bool degenerate = false;  // errors at integrator-noise level, fit meaningless
    std::vector<double> eps_values;
    std::vector<double> max_errors;
};

/// Least-squares slope of log(max error) against log(eps). Errors below
/// `floor` mark the fit degenerate.
inline ScalingResult fit_scaling(const std::vector<double>& eps_values,
                                 const std::vector<double>& max_errors,
                                 double floor = 1e-7) {
    if (eps_values.size() < 2 || eps_values.size() != max_errors.size())
        throw ConfigError("scaling fit needs at least two eps values");
    ScalingResult r;
    r.eps_values = eps_values;
    r.max_errors = max_errors;
    for (double e : max_errors)
        if (e < floor) r.degenerate = true;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(eps_values.size());
    for (std::size_t i = 0; i < eps_values.size(); ++i) {
        double lx = std::log(eps_values[i]);
        double ly = std::log(std::max(max_errors[i], 1e-300));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    r.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return r;
}

}  // namespace symmflow
