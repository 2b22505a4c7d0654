#include "bdsde/calculus.hpp"
#include <cmath>

#include "bdsde/error.hpp"
#include "bdsde/parallel.hpp"

namespace bdsde {

DiscreteProcess::DiscreteProcess(std::size_t N, std::size_t M, int dim_, Adaptedness tag_, double fill)
    : steps(N), paths(M), dim(dim_), tag(tag_), values((N + 1) * M * dim_, fill) {}

double pairwise_sum(std::span<const double> x) {
    if (x.size() <= 8) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t h = x.size() / 2;
    return pairwise_sum(x.first(h)) + pairwise_sum(x.subspan(h));
}

double pairwise_mean(std::span<const double> x) {
    return x.empty() ? 0.0 : pairwise_sum(x) / static_cast<double>(x.size());
}

namespace {

void check_shape(const DiscreteProcess& v, const PathBundle& p, int dim, std::size_t from, std::size_t to) {
    if (v.steps != p.grid().N) throw InvalidArgument("integrand has a different number of steps than the bundle");
    if (v.paths != 1 && v.paths != p.paths()) throw InvalidArgument("integrand path count does not match the bundle");
    if (v.dim != dim) throw InvalidArgument("integrand dimension does not match the driver");
    if (v.values.size() != (v.steps + 1) * v.paths * v.dim) throw InvalidArgument("integrand storage is malformed");
    if (from > to || to > p.grid().N) throw InvalidArgument("integration range outside the grid");
}

template <class Incr>
std::vector<double> integrate(const DiscreteProcess& v, const PathBundle& p, std::size_t from, std::size_t to,
                              std::size_t shift, int dim, Incr incr) {
    const std::size_t M = p.paths();
    std::vector<double> out(M, 0.0);
    parallel_for(M, [&](std::size_t b, std::size_t e) {
        for (std::size_t m = b; m < e; ++m) {
            const std::size_t mv = v.paths == 1 ? 0 : m;
            double s = 0.0;
            for (std::size_t i = from; i < to; ++i)
                for (int k = 0; k < dim; ++k) s += v.at(i + shift, mv, k) * incr(i, m, k);
            out[m] = s;
        }
    });
    return out;
}

}  // namespace

std::vector<double> forward_ito(const DiscreteProcess& v, const PathBundle& p, std::size_t from, std::size_t to) {
    check_shape(v, p, p.d(), from, to);
    return integrate(v, p, from, to, 0, p.d(), [&](std::size_t i, std::size_t m, int k) { return p.dW(i, m, k); });
}

std::vector<double> backward_ito(const DiscreteProcess& v, const PathBundle& p, std::size_t from, std::size_t to) {
    check_shape(v, p, p.l(), from, to);
    return integrate(v, p, from, to, 1, p.l(), [&](std::size_t i, std::size_t m, int k) { return p.dB(i, m, k); });
}

double ito_isometry_residual(const DiscreteProcess& v, const PathBundle& p, IntegralKind kind) {
    const std::size_t N = p.grid().N;
    const std::size_t M = p.paths();
    const std::size_t shift = kind == IntegralKind::forward ? 0 : 1;
    const auto integral = kind == IntegralKind::forward ? forward_ito(v, p, 0, N) : backward_ito(v, p, 0, N);
    std::vector<double> sq(M), qv(M);
    for (std::size_t m = 0; m < M; ++m) {
        sq[m] = integral[m] * integral[m];
        const std::size_t mv = v.paths == 1 ? 0 : m;
        double s = 0.0;
        for (std::size_t i = 0; i < N; ++i)
            for (int k = 0; k < v.dim; ++k) s += v.at(i + shift, mv, k) * v.at(i + shift, mv, k) * p.grid().dt;
        qv[m] = s;
    }
    return std::abs(pairwise_mean(sq) - pairwise_mean(qv));
}

}  // namespace bdsde
