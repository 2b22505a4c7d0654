#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bdsde/noise.hpp"

namespace bdsde {

enum class Adaptedness { forward, backward, deterministic };

/// values[(i * paths + m) * dim + k] for i = 0..N. A process with a single
/// path is broadcast over every path of the bundle it is integrated against.
struct DiscreteProcess {
    std::size_t steps = 0;  // N; the process has N + 1 time slices
    std::size_t paths = 1;
    int dim = 1;
    Adaptedness tag = Adaptedness::deterministic;
    std::vector<double> values;

    DiscreteProcess() = default;
    DiscreteProcess(std::size_t N, std::size_t M, int dim, Adaptedness tag, double fill = 0.0);

    double& at(std::size_t i, std::size_t m, int k = 0) { return values[(i * paths + m) * dim + k]; }
    double at(std::size_t i, std::size_t m, int k = 0) const { return values[(i * paths + m) * dim + k]; }
};

/// Sum of x in a fixed pairwise order, independent of thread count.
double pairwise_sum(std::span<const double> x);
double pairwise_mean(std::span<const double> x);

/// Sum_{i=from}^{to-1} <v[i], dW[i]> per path (left endpoint).
std::vector<double> forward_ito(const DiscreteProcess& v, const PathBundle& paths, std::size_t from, std::size_t to);
/// Sum_{i=from}^{to-1} <v[i+1], dB[i]> per path (right endpoint).
std::vector<double> backward_ito(const DiscreteProcess& v, const PathBundle& paths, std::size_t from, std::size_t to);

enum class IntegralKind { forward, backward };

/// |mean((integral over [0,T])^2) - mean(sum |v|^2 dt)|.
double ito_isometry_residual(const DiscreteProcess& v, const PathBundle& paths, IntegralKind kind);

}  // namespace bdsde
