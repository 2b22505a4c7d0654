#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace bdsde {

/// Uniform time grid t_i = i*T/N on [0, T].
struct TimeGrid {
    double T = 1.0;
    std::size_t N = 1;
    double dt = 1.0;

    double t(std::size_t i) const { return i == N ? T : static_cast<double>(i) * dt; }
    std::vector<double> nodes() const;
    bool operator==(const TimeGrid& o) const { return T == o.T && N == o.N; }
};

TimeGrid make_grid(double T, long long N);

enum class Law { gaussian, rademacher };

std::string to_string(Law law);
Law parse_law(const std::string& name);

/// Increments of the two independent drivers W (d-dim) and B (l-dim).
/// Immutable once built; share it through SharedPaths.
class PathBundle {
public:
    PathBundle(TimeGrid grid, int d, int l, std::size_t M, Law law, std::uint64_t seed,
               std::vector<double> dW, std::vector<double> dB);

    const TimeGrid& grid() const { return grid_; }
    int d() const { return d_; }
    int l() const { return l_; }
    std::size_t paths() const { return M_; }
    Law law() const { return law_; }
    std::uint64_t seed() const { return seed_; }

    double dW(std::size_t i, std::size_t m, int k = 0) const { return dW_[(i * M_ + m) * d_ + k]; }
    double dB(std::size_t i, std::size_t m, int j = 0) const { return dB_[(i * M_ + m) * l_ + j]; }
    // All increments of one step, laid out [m][k].
    std::span<const double> dW_step(std::size_t i) const { return {dW_.data() + i * M_ * d_, M_ * d_}; }
    std::span<const double> dB_step(std::size_t i) const { return {dB_.data() + i * M_ * l_, M_ * l_}; }

private:
    TimeGrid grid_;
    int d_;
    int l_;
    std::size_t M_;
    Law law_;
    std::uint64_t seed_;
    std::vector<double> dW_;
    std::vector<double> dB_;
};

using SharedPaths = std::shared_ptr<const PathBundle>;

/// Counter-based draw: increments are a pure function of
/// (seed, stream, step, path, component). W uses stream 2*family, B uses 2*family+1.
SharedPaths sample_paths(const TimeGrid& grid, int d, int l, std::size_t M, std::uint64_t seed, Law law,
                         std::uint64_t family = 0);

/// Common random numbers: the returned handle aliases the same increment data.
inline SharedPaths couple_paths(const SharedPaths& bundle) { return bundle; }

/// Every combination of Rademacher signs for (W, B) with d = l = 1: 4^N paths.
SharedPaths enumerate_rademacher(const TimeGrid& grid);

/// 64-bit mix of a counter tuple; exposed for tests.
std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t step, std::uint64_t path,
                           std::uint64_t component);

}  // namespace bdsde
