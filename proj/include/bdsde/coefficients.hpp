#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bdsde {

/// What a terminal value or obstacle may observe at a node: the current time,
/// W_t, the B-tail B_T - B_t and the current increment dB_i (first B component).
struct NodeState {
    double t = 0.0;
    std::span<const double> w;
    double btail = 0.0;
    double db = 0.0;
};

using Terminal = std::function<double(const NodeState&)>;
using Obstacle = std::function<double(const NodeState&)>;
using Generator = std::function<double(double t, double y, std::span<const double> z)>;
// Writes l outputs into `out`.
using NoiseCoefficient = std::function<void(double t, double y, std::span<const double> z, std::span<double> out)>;
using TimeFunction = std::function<double(double t)>;
using ScalarMap = std::function<double(double x)>;

struct Problem {
    int d = 1;
    int l = 1;
    double T = 1.0;
    Terminal xi;
    Generator f;
    NoiseCoefficient g;  // empty means g = 0
    std::optional<Obstacle> S;

    double C = 1.0;
    double alpha = 0.5;
    double mu = 0.0;
    TimeFunction lambda;  // empty means 0
    ScalarMap phi;        // growth function; empty means constant phi0
    double phi0 = 0.0;
    std::optional<double> xi_bound;  // declared sup|xi|

    void validate() const;
    double lambda_at(double t) const { return lambda ? lambda(t) : 0.0; }
    double phi_at(double u) const { return phi ? phi(u) : phi0; }
};

double truncate_radial(double x, double n);
std::vector<double> truncate_radial(std::span<const double> x, double n);

/// Unique root x of x - eps*F(x) = y for non-increasing continuous F.
double yosida_resolvent(const ScalarMap& F, double eps, double y);
/// (J^eps(x) - x) / eps.
double yosida_apply(const ScalarMap& F, double eps, double x);

/// sup_q { f(t,y,q) - n|z-q| }; C is the linear growth constant of f in z.
double sup_convolve(const Generator& f, double n, double C, double t, double y, std::span<const double> z);
/// inf_{p,q} { f(t,p,q) + n|y-p| + n|z-q| }.
double inf_convolve(const Generator& f, double n, double C, double t, double y, std::span<const double> z);

Generator sup_convolution(Generator f, double n, double C);
Generator inf_convolution(Generator f, double n, double C);

/// Cubic smoothstep: 1 for |z| <= n, 0 for |z| >= n+1.
double smooth_cutoff(std::span<const double> z, double n);

/// Piecewise-linear hat: 1 on |y| <= cbar, 0 on |y| >= 2 cbar.
double hat_truncation(double y, double cbar);
Generator truncate_general_growth(Generator f, double cbar);

enum class PenaltyForm { positive_part, linear };

/// n (y - s)^- or n (s - y).
double penalty_term(double y, double s, double n, PenaltyForm form);
/// f + penalty, as a function of (t, y, z, s) with s the obstacle value at the node.
std::function<double(double, double, std::span<const double>, double)> penalize_obstacle(Generator f, double n,
                                                                                          PenaltyForm form);

/// (e^{mu T} xi, e^{mu t} f(t, e^{-mu t} y, e^{-mu t} z) - mu y, e^{mu t} g(...), e^{mu t} S).
Problem exp_transform(const Problem& p, double mu);

struct StrTransform {
    Problem problem;
    ScalarMap phi;      // y = phi(ytilde)
    ScalarMap phi_inv;  // ytilde = phi^{-1}(y)
    ScalarMap dphi;
    ScalarMap d2phi;
};

/// Change of variable y = phi(ytilde) with phi(u) = (1/B) ln(e^{ABu+1}/A) - M.
StrTransform str_transform(const Problem& p, double A, double B, double M);

// Assumption profiles.

enum class ProfileTag { F1, F2, F3, F4, G1, G2, G4, STR, S1, S2, A1, A2 };

std::string to_string(ProfileTag tag);
ProfileTag parse_profile_tag(const std::string& name);

struct AssumptionProfile {
    ProfileTag tag = ProfileTag::F1;
    std::map<std::string, double> constants;   // e.g. "eps", "a", "M", "bound"
    std::map<std::string, TimeFunction> functions;  // e.g. "k1", "k2", "keps", "b"
};

struct InequalityReport {
    std::string name;
    double worst_margin = -1e300;  // max of lhs - rhs over samples
    std::size_t violations = 0;
    std::size_t samples = 0;
};

struct ProfileReport {
    ProfileTag tag = ProfileTag::F1;
    std::vector<InequalityReport> inequalities;
    std::size_t total_violations() const;
};

/// Samples (t, y, z) and paths and reports the worst margin of every inequality
/// in the profile. Never throws on a violated inequality.
ProfileReport profile_check(const Problem& p, const AssumptionProfile& profile, std::size_t samples,
                            std::uint64_t seed);

}  // namespace bdsde
