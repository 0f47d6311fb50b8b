#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "symmflow/canonicalize.hpp"
#include "symmflow/errors.hpp"
#include "symmflow/grid.hpp"
#include "symmflow/ode.hpp"
#include "symmflow/perturb.hpp"
#include "symmflow/symmetry.hpp"
#include "symmflow/version.hpp"

namespace symmflow {

using Json = nlohmann::ordered_json;

/// Everything a command needs, parsed and canonicalized up front.
struct ProblemFile {
    std::string name;
    std::string independent = "x";
    std::optional<PerturbedODE> ode;
    CanonOptions canon;  // parameter bindings + declared unknowns
    AnsatzSpec ansatz = AnsatzSpec::defaults();
    std::vector<InitialCondition> ics;
    std::vector<double> eps_values;
    GridSpec grid;
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    std::optional<std::string> mu_text;        // integrating-factor candidate
    std::optional<Rational> amplitude;         // oscillatory family amplitude
    std::string digest;

    CanonExpr parse_expr(const std::string& text) const {
        return parse_canonical(text, canon);
    }
};

namespace detail {

inline std::string fnv1a_hex(const std::string& bytes) {
    unsigned long long h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", h);
    return buf;
}

inline std::vector<CanonExpr> parse_basis(const Json& arr, const CanonOptions& opt) {
    std::vector<CanonExpr> out;
    for (const auto& item : arr) out.push_back(parse_canonical(item.get<std::string>(), opt));
    return out;
}

}  // namespace detail

inline ProblemFile load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open problem file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();

    Json j;
    try {
        j = Json::parse(bytes);
    } catch (const std::exception& e) {
        throw ConfigError("problem file is not valid JSON: " + std::string(e.what()));
    }

    ProblemFile p;
    p.digest = detail::fnv1a_hex(bytes);
    p.name = j.value("name", std::string("problem"));
    p.independent = j.value("independent", std::string("x"));

    if (j.contains("params"))
        for (const auto& [key, val] : j["params"].items())
            p.canon.bindings[key] = Rational::from_string(val.get<std::string>());
    if (j.contains("unknowns"))
        for (const auto& u : j["unknowns"]) p.canon.unknowns.insert(u.get<std::string>());

    if (j.contains("ode")) {
        const Json& o = j["ode"];
        int order = o.value("order", 2);
        CanonExpr f0 = p.parse_expr(o.value("f0", std::string("0")));
        CanonExpr f1 = p.parse_expr(o.value("f1", std::string("0")));
        p.ode.emplace(order, std::move(f0), std::move(f1));
    }

    if (j.contains("ansatz")) {
        const Json& a = j["ansatz"];
        if (a.contains("x_basis")) p.ansatz.x_basis = detail::parse_basis(a["x_basis"], p.canon);
        if (a.contains("evolutionary_x_basis"))
            p.ansatz.evolutionary_x_basis =
                detail::parse_basis(a["evolutionary_x_basis"], p.canon);
        p.ansatz.y_degree = a.value("y_degree", p.ansatz.y_degree);
        p.ansatz.jet_order = a.value("jet_order", p.ansatz.jet_order);
        p.ansatz.jet_degree = a.value("jet_degree", p.ansatz.jet_degree);
    }

    if (j.contains("ics"))
        for (const auto& ic : j["ics"]) {
            InitialCondition c;
            c.order = ic.value("order", 0);
            c.value0 = Rational::from_string(ic.value("value0", std::string("0")));
            c.value1 = Rational::from_string(ic.value("value1", std::string("0")));
            p.ics.push_back(std::move(c));
        }

    if (j.contains("eps"))
        for (const auto& e : j["eps"]) p.eps_values.push_back(e.get<double>());

    if (j.contains("grid")) {
        p.grid.start = j["grid"].value("start", p.grid.start);
        p.grid.stop = j["grid"].value("stop", p.grid.stop);
        p.grid.step = j["grid"].value("step", p.grid.step);
    }
    if (j.contains("tol")) {
        p.abs_tol = j["tol"].value("abs", p.abs_tol);
        p.rel_tol = j["tol"].value("rel", p.rel_tol);
    }
    if (j.contains("mu")) p.mu_text = j["mu"].get<std::string>();
    if (j.contains("amplitude"))
        p.amplitude = Rational::from_string(j["amplitude"].get<std::string>());
    return p;
}

/// Deterministic command report; insertion order is emission order.
struct RunReport {
    Json body = Json::object();

    RunReport(const std::string& command, const ProblemFile& p) {
        body["command"] = command;
        body["problem"] = p.name;
        body["input_digest"] = p.digest;
        body["engine_version"] = kVersion;
        body["outputs"] = Json::object();
    }

    Json& outputs() { return body["outputs"]; }

    std::string str() const { return body.dump(2) + "\n"; }
};

inline Json generator_json(const PointGenerator& g) {
    Json j = Json::object();
    j["xi0"] = g.xi0.str();
    j["eta0"] = g.eta0.str();
    j["xi1"] = g.xi1.str();
    j["eta1"] = g.eta1.str();
    return j;
}

inline Json generator_json(const EvolutionaryGenerator& g) {
    Json j = Json::object();
    j["zeta0"] = g.zeta0.str();
    j["zeta1"] = g.zeta1.str();
    return j;
}

}  // namespace symmflow
