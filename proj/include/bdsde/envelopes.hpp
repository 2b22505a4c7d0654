#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "bdsde/coefficients.hpp"
#include "bdsde/noise.hpp"

namespace bdsde {

struct Solution;

enum class EnvelopeKind { upper, lower };

/// Deterministic bound of time. `provenance` names the estimate that produced it.
struct Envelope {
    EnvelopeKind kind = EnvelopeKind::upper;
    std::function<double(double)> value;
    std::string provenance;
    double crosscheck_residual = 0.0;  // max |closed form - RK4| on the check grid, if computed

    double operator()(double t) const { return value(t); }
    std::vector<double> on_grid(const TimeGrid& grid) const;
};

/// Adaptive Simpson quadrature to an absolute tolerance.
double adaptive_simpson(const std::function<double(double)>& h, double a, double b, double tol = 1e-10);

/// Classical RK4 for x' = F(t, x) from (t0, x0) to t1 in `steps` steps (t1 may be below t0).
double rk4(const std::function<double(double, double)>& F, double t0, double x0, double t1, int steps);

/// X_t = xi_part e^{int_t^T b} + int_t^T (a_s + 4C/(1-alpha) lambda_s^2) e^{int_t^s b} ds,
/// negated for the lower envelope. `xi_part` is the size of the positive (upper)
/// or negative (lower) part of the terminal value.
Envelope linear_envelope(double xi_part, const TimeFunction& a, const TimeFunction& b, double C, double alpha,
                         const TimeFunction& lambda, double T, EnvelopeKind kind);

/// (U, V) with V_t = (1 + xi_bound) e^{C(T-t)} - 1 and U = -V.
std::pair<Envelope, Envelope> ode_pair_uv(double C, double xi_bound, double T);

/// (e^{(phi0+mu)T} v 1)(xi_bound + 1).
double power_bound(double phi0, double mu, double T, double xi_bound);

struct PhiValue {
    double value;
    double d1;
    double d2;
};

/// Variants: "phi" (exponential bound function), "phi_shifted" (aux = {M}),
/// "phi_quadratic", "phi_supconv" (aux = {gamma, T, c}).
PhiValue phi_family(double u, const std::string& variant, double C, double alpha, const std::vector<double>& aux = {});

struct EnvelopeReport {
    std::vector<double> max_exceedance;  // per step, max over nodes of signed exceedance
    double worst = -1e300;
    double fraction_above_tol = 0.0;
    std::size_t count_above_tol = 0;
};

/// Signed exceedance (Y - upper) or (lower - Y) per node. Never throws on violations.
EnvelopeReport check_envelope(const Solution& sol, const Envelope& env, double stat_tol);

}  // namespace bdsde
