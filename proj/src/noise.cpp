#include "bdsde/noise.hpp"

#include <cmath>
#include <numbers>

#include "bdsde/error.hpp"
#include "bdsde/parallel.hpp"

namespace bdsde {

std::vector<double> TimeGrid::nodes() const {
    std::vector<double> out(N + 1);
    for (std::size_t i = 0; i <= N; ++i) out[i] = t(i);
    return out;
}

TimeGrid make_grid(double T, long long N) {
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("grid horizon T must be positive");
    if (N < 1) throw InvalidArgument("grid needs at least one step");
    return TimeGrid{T, static_cast<std::size_t>(N), T / static_cast<double>(N)};
}

std::string to_string(Law law) { return law == Law::gaussian ? "gaussian" : "rademacher"; }

Law parse_law(const std::string& name) {
    if (name == "gaussian") return Law::gaussian;
    if (name == "rademacher") return Law::rademacher;
    throw InvalidArgument("unknown noise law '" + name + "'");
}

PathBundle::PathBundle(TimeGrid grid, int d, int l, std::size_t M, Law law, std::uint64_t seed,
                       std::vector<double> dW, std::vector<double> dB)
    : grid_(grid), d_(d), l_(l), M_(M), law_(law), seed_(seed), dW_(std::move(dW)), dB_(std::move(dB)) {
    if (dW_.size() != grid_.N * M_ * d_ || dB_.size() != grid_.N * M_ * l_)
        throw InvalidArgument("increment arrays do not match the bundle shape");
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform in (0, 1), never 0.
double to_open_unit(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53; }

double draw(Law law, double sd, std::uint64_t seed, std::uint64_t stream, std::uint64_t step, std::uint64_t path,
            std::uint64_t comp) {
    const std::uint64_t h = counter_hash(seed, stream, step, path, 2 * comp);
    if (law == Law::rademacher) return (h >> 63) ? sd : -sd;
    const std::uint64_t h2 = counter_hash(seed, stream, step, path, 2 * comp + 1);
    const double u1 = to_open_unit(h);
    const double u2 = to_open_unit(h2);
    return sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t step, std::uint64_t path,
                           std::uint64_t component) {
    std::uint64_t h = splitmix(seed);
    h = splitmix(h ^ stream);
    h = splitmix(h ^ step);
    h = splitmix(h ^ path);
    return splitmix(h ^ component);
}

SharedPaths sample_paths(const TimeGrid& grid, int d, int l, std::size_t M, std::uint64_t seed, Law law,
                         std::uint64_t family) {
    if (d < 1 || l < 1 || M < 1) throw InvalidArgument("sample_paths needs d, l, M >= 1");
    const std::size_t N = grid.N;
    const double sd = std::sqrt(grid.dt);
    std::vector<double> dW(N * M * d), dB(N * M * l);
    const std::uint64_t sw = 2 * family, sb = 2 * family + 1;
    parallel_for(M, [&](std::size_t b, std::size_t e) {
        for (std::size_t m = b; m < e; ++m)
            for (std::size_t i = 0; i < N; ++i) {
                for (int k = 0; k < d; ++k) dW[(i * M + m) * d + k] = draw(law, sd, seed, sw, i, m, k);
                for (int j = 0; j < l; ++j) dB[(i * M + m) * l + j] = draw(law, sd, seed, sb, i, m, j);
            }
    });
    return std::make_shared<const PathBundle>(grid, d, l, M, law, seed, std::move(dW), std::move(dB));
}

SharedPaths enumerate_rademacher(const TimeGrid& grid) {
    const std::size_t N = grid.N;
    if (N > 12) throw InvalidArgument("full Rademacher enumeration is capped at N = 12");
    const std::size_t M = std::size_t{1} << (2 * N);
    const double sd = std::sqrt(grid.dt);
    std::vector<double> dW(N * M), dB(N * M);
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t i = 0; i < N; ++i) {
            dW[i * M + m] = ((m >> i) & 1U) ? sd : -sd;
            dB[i * M + m] = ((m >> (N + i)) & 1U) ? sd : -sd;
        }
    return std::make_shared<const PathBundle>(grid, 1, 1, M, Law::rademacher, 0, std::move(dW), std::move(dB));
}

}  // namespace bdsde
