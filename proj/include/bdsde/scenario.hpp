#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bdsde/coefficients.hpp"
#include "bdsde/condexp.hpp"
#include "bdsde/expr.hpp"
#include "bdsde/solver.hpp"

namespace bdsde {

/// One `key = value` entry with its source position.
struct Entry {
    std::string value;
    int line = 0;
    int column = 0;  // column of the first character of value
};

using Section = std::map<std::string, Entry>;

/// Coefficient expressions of one problem (the main one or its comparison partner).
struct ProblemExprs {
    Expr xi;
    Expr f;
    std::vector<Expr> g;  // l entries; empty means g = 0
    Expr S;               // empty when unreflected
};

struct CheckSpec {
    std::string name;  // expect.Y0, comparison, skorokhod, envelope, ladder, contraction, energy, certificate
    std::string suite;
    std::map<std::string, std::string> params;
};

struct Scenario {
    std::string name;
    std::string source;  // file path or builtin:<name>
    std::map<std::string, Section> sections;

    // [problem]
    int d = 1;
    int l = 1;
    double T = 1.0;
    ProblemExprs exprs;
    std::optional<ProblemExprs> partner;
    double C = 1.0;
    double alpha = 0.5;
    double mu = 0.0;
    Expr lambda;
    Expr phi;
    double phi0 = 0.0;
    std::optional<double> xi_bound;
    std::vector<AssumptionProfile> profiles;

    // [numerics]
    BackendKind backend = BackendKind::tree;
    std::size_t N = 8;
    std::size_t M = 10000;
    Law law = Law::gaussian;
    std::uint64_t seed = 1;
    SolveOptions solve;
    RegressionBasis basis;
    std::string solver = "backward";  // backward | projection | penalized | pipeline
    double penalty = 0.0;
    PenaltyForm penalty_form = PenaltyForm::positive_part;
    bool shared_enumeration = false;  // mc over every Rademacher path

    std::vector<CheckSpec> checks;

    // [outputs]
    std::string out_dir;
    std::vector<std::string> formats{"json", "csv", "summary"};

    Problem problem() const;
    std::optional<Problem> partner_problem() const;
};

/// Parses scenario text. `origin` is used in messages and as Scenario::source.
Scenario parse_scenario(const std::string& text, const std::string& origin);
/// Reads a file, or a built-in oracle when `path` is "builtin:<name>".
Scenario load_scenario(const std::string& path);

/// Problem built from expressions (shared by the loader and tests).
Problem make_problem(const Scenario& s, const ProblemExprs& e);

}  // namespace bdsde
