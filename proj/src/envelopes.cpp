#include "bdsde/envelopes.hpp"

#include <algorithm>
#include <cmath>

#include "bdsde/error.hpp"
#include "bdsde/solver.hpp"

namespace bdsde {

std::vector<double> Envelope::on_grid(const TimeGrid& grid) const {
    std::vector<double> out(grid.N + 1);
    for (std::size_t i = 0; i <= grid.N; ++i) out[i] = value(grid.t(i));
    return out;
}

namespace {

double simpson_rec(const std::function<double(double)>& h, double a, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = h(lm), frm = h(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double diff = left + right - whole;
    if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
    return simpson_rec(h, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(h, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& h, double a, double b, double tol) {
    if (a == b) return 0.0;
    const double fa = h(a), fb = h(b), fm = h(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(h, a, b, fa, fm, fb, whole, tol, 50);
}

double rk4(const std::function<double(double, double)>& F, double t0, double x0, double t1, int steps) {
    const double h = (t1 - t0) / steps;
    double x = x0, t = t0;
    for (int k = 0; k < steps; ++k) {
        const double k1 = F(t, x);
        const double k2 = F(t + 0.5 * h, x + 0.5 * h * k1);
        const double k3 = F(t + 0.5 * h, x + 0.5 * h * k2);
        const double k4 = F(t + h, x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = t0 + (k + 1) * h;
    }
    return x;
}

Envelope linear_envelope(double xi_part, const TimeFunction& a, const TimeFunction& b, double C, double alpha,
                         const TimeFunction& lambda, double T, EnvelopeKind kind) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0,1)");
    const double k = 4.0 * C / (1.0 - alpha);
    auto af = a ? a : TimeFunction([](double) { return 0.0; });
    auto bf = b ? b : TimeFunction([](double) { return 0.0; });
    auto lf = lambda ? lambda : TimeFunction([](double) { return 0.0; });
    // B(s) = int_0^s b.
    auto Bint = [bf](double s) { return adaptive_simpson(bf, 0.0, s, 1e-12); };
    const double sign = kind == EnvelopeKind::upper ? 1.0 : -1.0;
    Envelope env;
    env.kind = kind;
    env.provenance = kind == EnvelopeKind::upper ? "linear-growth upper bound" : "linear-growth lower bound";
    env.value = [=](double t) {
        const double Bt = Bint(t);
        const double BT = Bint(T);
        auto integrand = [&](double s) {
            const double l = lf(s);
            return (af(s) + k * l * l) * std::exp(Bint(s) - Bt);
        };
        return sign * (xi_part * std::exp(BT - Bt) + adaptive_simpson(integrand, t, T, 1e-10));
    };
    return env;
}

std::pair<Envelope, Envelope> ode_pair_uv(double C, double xi_bound, double T) {
    if (C < 0.0) throw InvalidArgument("C must be non-negative");
    Envelope V;
    V.kind = EnvelopeKind::upper;
    V.provenance = "quadratic-growth envelope V";
    V.value = [=](double t) { return (1.0 + xi_bound) * std::exp(C * (T - t)) - 1.0; };
    Envelope U;
    U.kind = EnvelopeKind::lower;
    U.provenance = "quadratic-growth envelope U = -V";
    U.value = [=](double t) { return -((1.0 + xi_bound) * std::exp(C * (T - t)) - 1.0); };

    // RK4 on V' = -C(1+V), U' = C(1+|U|) backwards from T, compared on 64 nodes.
    double worst = 0.0;
    const int nodes = 64;
    double v = xi_bound, u = -xi_bound;
    for (int i = nodes; i > 0; --i) {
        const double t1 = T * i / nodes, t0 = T * (i - 1) / nodes;
        v = rk4([C](double, double x) { return -C * (1.0 + x); }, t1, v, t0, 200);
        u = rk4([C](double, double x) { return C * (1.0 + std::abs(x)); }, t1, u, t0, 200);
        worst = std::max({worst, std::abs(v - V(t0)) / (1.0 + std::abs(v)), std::abs(u - U(t0)) / (1.0 + std::abs(u))});
    }
    V.crosscheck_residual = U.crosscheck_residual = worst;
    return {U, V};
}

double power_bound(double phi0, double mu, double T, double xi_bound) {
    return std::max(std::exp((phi0 + mu) * T), 1.0) * (xi_bound + 1.0);
}

PhiValue phi_family(double u, const std::string& variant, double C, double alpha, const std::vector<double>& aux) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0,1)");
    if (!(C > 0.0)) throw InvalidArgument("C must be positive");
    if (variant == "phi") {
        if (u < 0.0) return {0.0, 0.0, 0.0};
        const double k = 4.0 * C / (1.0 - alpha);
        const double e = std::exp(k * u);
        return {(e - 1.0) / k, e, k * e};
    }
    if (variant == "phi_shifted") {
        if (aux.size() < 1) throw InvalidArgument("phi_shifted needs aux = {M}");
        const double k = 4.0 * C / (1.0 - alpha);
        const double e = std::exp(k * (u + aux[0] + 1.0));
        return {(e - 1.0) / k, e, k * e};
    }
    if (variant == "phi_quadratic") {
        const double k = 20.0 * C / (1.0 - alpha);
        const double e = std::exp(k * u);
        const double s = (1.0 - alpha) / (200.0 * C * C);
        return {s * (e - k * u - 1.0), s * k * (e - 1.0), s * k * k * e};
    }
    if (variant == "phi_supconv") {
        if (aux.size() < 3) throw InvalidArgument("phi_supconv needs aux = {gamma, T, c}");
        if (u <= 0.0) return {0.0, 0.0, 0.0};
        const double gamma = aux[0], T = aux[1], c = aux[2];
        const double kappa = gamma - 1.0 - C * C / (1.0 - alpha);
        const double s = 2.0 * std::exp(gamma * T) * c * c;
        if (!(kappa > 0.0) || !(s > 0.0)) throw InvalidArgument("phi_supconv needs gamma > 1 + C^2/(1-alpha) and c > 0");
        const double e = std::exp(kappa * u / s);
        return {s / kappa * (e - 1.0), e, kappa / s * e};
    }
    throw InvalidArgument("unknown phi variant '" + variant + "'");
}

EnvelopeReport check_envelope(const Solution& sol, const Envelope& env, double stat_tol) {
    EnvelopeReport r;
    std::size_t total = 0;
    for (std::size_t i = 0; i <= sol.grid.N; ++i) {
        const double e = env(sol.grid.t(i));
        double worst = -1e300;
        for (double y : sol.Y[i]) {
            const double ex = env.kind == EnvelopeKind::upper ? y - e : e - y;
            worst = std::max(worst, ex);
            if (ex > stat_tol) ++r.count_above_tol;
            ++total;
        }
        r.max_exceedance.push_back(worst);
        r.worst = std::max(r.worst, worst);
    }
    r.fraction_above_tol = total ? static_cast<double>(r.count_above_tol) / static_cast<double>(total) : 0.0;
    return r;
}

}  // namespace bdsde
