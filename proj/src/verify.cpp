#include "bdsde/verify.hpp"

#include <algorithm>
#include <cmath>

#include "bdsde/calculus.hpp"
#include "bdsde/envelopes.hpp"
#include "bdsde/error.hpp"

namespace bdsde {

double comparison_tolerance(const Solution& dom) {
    return 10.0 * dom.grid.dt * (1.0 + dom.max_abs_Y());
}

ComparisonReport compare_root(const Solution& a, const Solution& b, double tol) {
    if (!(a.grid == b.grid)) throw InvalidArgument("solutions live on different grids");
    if (a.backend && b.backend && a.backend->kind() != b.backend->kind())
        throw InvalidArgument("solutions come from different backends");
    for (std::size_t i = 0; i <= a.grid.N; ++i)
        if (a.Y[i].size() != b.Y[i].size()) throw InvalidArgument("solutions have different node counts");
    ComparisonReport r;
    r.tolerance = tol;
    const bool tree = a.backend && a.backend->kind() == BackendKind::tree;
    if (tree) {
        double g = -1e300;
        for (std::size_t k = 0; k < a.Y[0].size(); ++k) g = std::max(g, a.Y[0][k] - b.Y[0][k]);
        r.root_gap = g;
    } else {
        r.root_gap = a.root() - b.root();
    }
    for (std::size_t i = 0; i <= a.grid.N; ++i)
        for (std::size_t k = 0; k < a.Y[i].size(); ++k) {
            const double diff = a.Y[i][k] - b.Y[i][k];
            if (diff > tol) ++r.nodewise_violations;
            r.nodewise_max = std::max(r.nodewise_max, diff);
        }
    r.pass = r.root_gap <= tol;
    return r;
}

double skorokhod_residual(const Solution& sol, const Obstacle& S) {
    if (!sol.reflected()) return 0.0;
    const Backend& be = *sol.backend;
    const auto Sv = obstacle_values(S, be);
    const std::size_t N = sol.grid.N;
    // Max and min of the pathwise sum by dynamic programming over successors.
    std::vector<double> hi(be.nodes(N), 0.0), lo(be.nodes(N), 0.0);
    for (std::size_t i = N; i-- > 0;) {
        const std::size_t n = be.nodes(i);
        std::vector<double> h2(n), l2(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double c = (sol.Y[i][k] - Sv[i][k]) * sol.dK[i][k];
            double mx = -1e300, mn = 1e300;
            for (std::size_t j = 0; j < be.branches(); ++j) {
                const std::size_t ch = be.child(i, k, j);
                mx = std::max(mx, hi[ch]);
                mn = std::min(mn, lo[ch]);
            }
            h2[k] = c + mx;
            l2[k] = c + mn;
        }
        hi.swap(h2);
        lo.swap(l2);
    }
    double r = 0.0;
    for (std::size_t k = 0; k < hi.size(); ++k) r = std::max({r, std::abs(hi[k]), std::abs(lo[k])});
    return r;
}

MonotoneReport monotone_monitor(const std::vector<Solution>& rungs, Direction dir, double tol) {
    MonotoneReport r;
    for (const auto& s : rungs) r.roots.push_back(s.root());
    for (std::size_t k = 1; k < r.roots.size(); ++k) {
        const double step = r.roots[k] - r.roots[k - 1];
        r.gaps.push_back(std::abs(step));
        const double bad = dir == Direction::non_increasing ? step : -step;
        if (bad > tol) {
            ++r.violations;
            r.worst_violation = std::max(r.worst_violation, bad);
        }
    }
    // Last three rungs give the last two gaps.
    if (r.gaps.size() >= 2) r.gaps_shrinking_tail = r.gaps[r.gaps.size() - 1] <= r.gaps[r.gaps.size() - 2];
    return r;
}

Estimate z_energy(const Solution& sol) {
    const std::size_t N = sol.grid.N;
    const double dt = sol.grid.dt;
    const int d = sol.d;
    Estimate e;
    const bool tree = sol.backend && sol.backend->kind() == BackendKind::tree;
    if (tree) {
        double total = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            std::vector<double> sq(sol.Y[i].size());
            for (std::size_t k = 0; k < sq.size(); ++k) {
                double s = 0.0;
                for (int q = 0; q < d; ++q) s += sol.Z[i][k * d + q] * sol.Z[i][k * d + q];
                sq[k] = s;
            }
            total += pairwise_mean(sq) * dt;
        }
        e.value = total;
        return e;
    }
    const std::size_t M = sol.Y[0].size();
    std::vector<double> per(M, 0.0), per2(M);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t m = 0; m < M; ++m) {
            double s = 0.0;
            for (int q = 0; q < d; ++q) s += sol.Z[i][m * d + q] * sol.Z[i][m * d + q];
            per[m] += s * dt;
        }
    e.value = pairwise_mean(per);
    for (std::size_t m = 0; m < M; ++m) per2[m] = (per[m] - e.value) * (per[m] - e.value);
    const double var = M > 1 ? pairwise_sum(per2) / static_cast<double>(M - 1) : 0.0;
    e.half_width = 1.96 * std::sqrt(var / static_cast<double>(M));
    return e;
}

double z_energy_bound(double C, double alpha, double M, double b_l1) {
    const double phi = phi_family(M, "phi_shifted", C, alpha, {M}).value;
    return (phi + std::exp(4.0 * C / (1.0 - alpha) * (1.0 + 2.0 * M)) * b_l1) / C;
}

ContractionStats picard_contraction_stats(const std::vector<Solution>& it, double gamma) {
    if (it.size() < 3) throw InvalidArgument("contraction statistics need at least three iterates");
    ContractionStats s;
    for (std::size_t k = 1; k < it.size(); ++k) s.distances.push_back(weighted_distance(it[k], it[k - 1], gamma));
    s.converged = std::all_of(s.distances.begin(), s.distances.end(), [](double v) { return v == 0.0; });
    for (std::size_t k = 1; k < s.distances.size(); ++k)
        s.ratios.push_back(s.distances[k - 1] > 0.0 ? s.distances[k] / s.distances[k - 1] : 0.0);
    // Least-squares slope of log distance against the iteration index.
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < s.distances.size(); ++k)
        if (s.distances[k] > 0.0) {
            xs.push_back(static_cast<double>(k));
            ys.push_back(std::log(s.distances[k]));
        }
    if (xs.size() < 2) {
        s.fitted_factor = 0.0;
        return s;
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        mx += xs[k];
        my += ys[k];
    }
    mx /= xs.size();
    my /= ys.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxy += (xs[k] - mx) * (ys[k] - my);
        sxx += (xs[k] - mx) * (xs[k] - mx);
    }
    s.fitted_factor = std::exp(sxy / sxx);
    return s;
}

}  // namespace bdsde
