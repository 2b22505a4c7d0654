#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "bdsde/coefficients.hpp"
#include "bdsde/condexp.hpp"

namespace bdsde {

enum class Scheme { explicit_step, inner_picard, implicit_step };

struct SolveOptions {
    Scheme scheme = Scheme::explicit_step;
    int inner_iterations = 3;  // inner_picard only
};

std::string to_string(Scheme s);

/// Discrete (Y, Z, K) on the nodes of a backend. Y[i] and dK[i] have
/// backend->nodes(i) entries, Z[i] has nodes * d entries; Z[N] = 0 and dK[N] = 0.
struct Solution {
    SharedBackend backend;
    TimeGrid grid;
    int d = 1;
    std::vector<std::vector<double>> Y;
    std::vector<std::vector<double>> Z;
    std::vector<std::vector<double>> dK;  // dK[i] pushes Y at step i; empty when unreflected
    std::vector<int> inner_iterations;    // per step
    SolveOptions options;
    std::string solver;
    std::vector<std::string> warnings;

    bool reflected() const { return !dK.empty(); }
    /// Mean of Y_0 over root nodes or paths.
    double root() const;
    double max_abs_Y() const;
    /// K_i = sum_{j<i} mean(dK_j), i = 0..N.
    std::vector<double> K_mean() const;
};

/// Obstacle values at every node of every slice.
std::vector<std::vector<double>> obstacle_values(const Obstacle& S, const Backend& backend);

Solution solve_backward(const Problem& p, const SharedBackend& backend, const SolveOptions& opts = {});
Solution solve_reflected_projection(const Problem& p, const SharedBackend& backend, const SolveOptions& opts = {});
/// Penalty n (y - S)^- (or n (S - y) for the linear form) handled implicitly in y.
Solution solve_reflected_penalized(const Problem& p, double n, const SharedBackend& backend,
                                   const SolveOptions& opts = {}, PenaltyForm form = PenaltyForm::positive_part);

/// Picard map Theta(U, V): f sees (Y, V), g sees (U, V). Starts from (0, 0).
struct PicardResult {
    std::vector<Solution> iterates;  // iterates[0] is the zero start
    double gamma = 0.0;
    std::vector<double> distances;   // weighted distance between successive iterates
    std::vector<double> ratios;
};
double auto_gamma(double C, double alpha);
Solution picard_step(const Problem& p, const SharedBackend& backend, const Solution& frozen);
PicardResult picard_outer(const Problem& p, const SharedBackend& backend, int iterations,
                          std::optional<double> gamma = std::nullopt);
/// Sum_i e^{gamma t_i} mean((dY)^2 + |dZ|^2 dt).
double weighted_distance(const Solution& a, const Solution& b, double gamma);

enum class LadderMode { sup_conv, inf_conv, penalized };
std::string to_string(LadderMode m);
LadderMode parse_ladder_mode(const std::string& s);

struct LadderReport {
    std::vector<double> schedule;
    std::vector<double> roots;
    std::vector<double> gaps;  // |root_{k+1} - root_k|
    std::size_t order_violations = 0;
    double worst_violation = 0.0;
    bool gaps_shrinking_tail = true;  // over the last three rungs
};

struct LadderResult {
    std::vector<Solution> rungs;
    LadderReport report;
};

LadderResult maximal_ladder(const Problem& p, const std::vector<double>& schedule, LadderMode mode,
                            const SharedBackend& backend, const SolveOptions& opts = {}, double tol = 1e-8);

struct PipelineResult {
    Solution solution;
    double cbar = 0.0;
    double shift = 0.0;      // b = sup|S| for the reflected variant
    double max_abs_Y = 0.0;  // of the (shifted) truncated solve
    double exceedance = 0.0; // max(0, max|Y| - cbar)
};

/// Truncated solve with cbar from the power bound; throws NumericalFailure if
/// max|Y| exceeds cbar by more than 10 dt cbar.
PipelineResult quadratic_pipeline(const Problem& p, const SharedBackend& backend, const SolveOptions& opts = {});

/// (e^{-mu t} Ybar, e^{-mu t} Zbar, e^{-mu t} dKbar).
Solution exp_map_back(const Solution& transformed, double mu);

}  // namespace bdsde
