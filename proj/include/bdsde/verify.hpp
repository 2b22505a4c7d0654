#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bdsde/coefficients.hpp"
#include "bdsde/solver.hpp"

namespace bdsde {

struct ComparisonReport {
    double root_gap = 0.0;  // Y0^A - Y0^B: worst root node on the tree, mean over paths for mc
    std::size_t nodewise_violations = 0;
    double nodewise_max = 0.0;
    double tolerance = 0.0;
    bool pass = true;
};

ComparisonReport compare_root(const Solution& a, const Solution& b, double tol);
/// 10 dt (1 + max|Y|) with Y the dominating solution.
double comparison_tolerance(const Solution& dominating);

/// max over paths of |sum_i (Y_i - S_i) dK_i|.
double skorokhod_residual(const Solution& sol, const Obstacle& S);

enum class Direction { non_increasing, non_decreasing };

struct MonotoneReport {
    std::vector<double> roots;
    std::vector<double> gaps;
    std::size_t violations = 0;
    double worst_violation = 0.0;
    bool gaps_shrinking_tail = true;
    bool monotone() const { return violations == 0; }
};

MonotoneReport monotone_monitor(const std::vector<Solution>& rungs, Direction dir, double tol);

struct Estimate {
    double value = 0.0;
    double half_width = 0.0;  // 95% CLT half-width; 0 on the tree
};

/// E sum_i |Z_i|^2 dt.
Estimate z_energy(const Solution& sol);

/// Right-hand side of the Z-energy estimate divided by C:
/// (Phi_shifted(M) + e^{4C(1+2M)/(1-alpha)} ||b||_{L1}) / C.
double z_energy_bound(double C, double alpha, double M, double b_l1);

struct ContractionStats {
    std::vector<double> distances;
    std::vector<double> ratios;
    double fitted_factor = 0.0;
    bool converged = false;  // all distances zero
};

ContractionStats picard_contraction_stats(const std::vector<Solution>& iterates, double gamma);

}  // namespace bdsde
