#include "bdsde/coefficients.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "bdsde/error.hpp"

namespace bdsde {

void Problem::validate() const {
    if (d < 1 || l < 1) throw InvalidArgument("dimensions d and l must be at least 1");
    if (!(T > 0.0)) throw InvalidArgument("horizon T must be positive");
    if (!xi) throw InvalidArgument("terminal value is missing");
    if (!f) throw InvalidArgument("generator is missing");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0,1)");
    if (C < 0.0) throw InvalidArgument("C must be non-negative");
}

double truncate_radial(double x, double n) {
    if (std::abs(x) <= n) return x;
    return x > 0 ? n : -n;
}

std::vector<double> truncate_radial(std::span<const double> x, double n) {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    const double r = std::sqrt(r2);
    std::vector<double> out(x.begin(), x.end());
    if (r > n)
        for (double& v : out) v *= n / r;
    return out;
}

double yosida_resolvent(const ScalarMap& F, double eps, double y) {
    if (!(eps > 0.0)) throw InvalidArgument("Yosida parameter must be positive");
    auto h = [&](double x) { return x - eps * F(x) - y; };
    const double tol = 1e-12 * (1.0 + std::abs(y));
    double h0 = h(y);
    if (!std::isfinite(h0)) throw NumericalFailure("resolvent map is not finite at the starting point");
    if (std::abs(h0) <= tol) return y;

    // h is increasing: walk away from y until the sign flips.
    double lo = y, hi = y;
    double step = 1.0 + std::abs(y);
    bool found = false;
    for (int k = 0; k < 60; ++k) {
        const double x = h0 > 0 ? y - step : y + step;
        const double hx = h(x);
        if (h0 > 0 ? hx <= 0 : hx >= 0) {
            if (h0 > 0) { lo = x; } else { hi = x; }
            if (std::abs(hx) <= tol) return x;
            found = true;
            break;
        }
        if (h0 > 0) { hi = x; } else { lo = x; }
        step *= 2.0;
    }
    if (!found) throw NumericalFailure("resolvent bracket not found within 60 doublings");

    double best = lo, best_abs = std::abs(h(lo));
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double hm = h(mid);
        if (std::abs(hm) < best_abs) { best = mid; best_abs = std::abs(hm); }
        if (std::abs(hm) <= tol) return mid;
        if (hm > 0) hi = mid; else lo = mid;
    }
    if (std::abs(h(hi)) < best_abs) best = hi;
    return best;
}

double yosida_apply(const ScalarMap& F, double eps, double x) { return (yosida_resolvent(F, eps, x) - x) / eps; }

namespace {

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// Maximizes obj over the box center +- radius (per axis) by a coarse grid
// followed by repeated zooming around the incumbent. The center and any
// supplied extra points are always candidates.
template <class Obj>
double grid_zoom_max(Obj&& obj, std::vector<double> center, double radius, const std::vector<std::vector<double>>& extra) {
    const std::size_t dim = center.size();
    std::vector<double> best = center;
    double best_val = obj(center);
    for (const auto& e : extra) {
        const double v = obj(e);
        if (v > best_val) { best_val = v; best = e; }
    }
    const int coarse = dim == 1 ? 201 : dim == 2 ? 41 : dim == 3 ? 15 : 9;
    const int fine = dim <= 2 ? 11 : 7;

    std::vector<double> q(dim);
    auto sweep = [&](const std::vector<double>& c, double h, int pts) {
        std::vector<int> idx(dim, 0);
        const double step = pts > 1 ? 2.0 * h / (pts - 1) : 0.0;
        std::vector<double> local_best = best;
        double local_val = best_val;
        while (true) {
            for (std::size_t a = 0; a < dim; ++a) q[a] = c[a] - h + step * idx[a];
            const double v = obj(q);
            if (v > local_val) { local_val = v; local_best = q; }
            std::size_t a = 0;
            while (a < dim && ++idx[a] == pts) { idx[a] = 0; ++a; }
            if (a == dim) break;
        }
        best = local_best;
        best_val = local_val;
        return step;
    };

    double h = radius;
    double step = sweep(center, h, coarse);
    while (step > 1e-10) {
        h = step;
        step = sweep(best, h, fine);
    }
    return best_val;
}

}  // namespace

double sup_convolve(const Generator& f, double n, double C, double t, double y, std::span<const double> z) {
    if (!(n > C)) throw InvalidArgument("sup-convolution needs n > C");
    const std::size_t d = z.size();
    const std::vector<double> zero(d, 0.0);
    const double fz = f(t, y, z);
    const double f0 = f(t, y, zero);
    const double zn = norm(z);
    const double R = std::max(2.0 * std::abs(fz) + 2.0 * C * zn + 2.0, std::abs(f0) + std::abs(fz) + C * zn + 1.0) / (n - C);
    auto obj = [&](const std::vector<double>& q) {
        double dist2 = 0.0;
        for (std::size_t k = 0; k < d; ++k) dist2 += (z[k] - q[k]) * (z[k] - q[k]);
        return f(t, y, q) - n * std::sqrt(dist2);
    };
    std::vector<std::vector<double>> extra;
    if (zn <= R) extra.push_back(zero);
    return grid_zoom_max(obj, std::vector<double>(z.begin(), z.end()), R, extra);
}

double inf_convolve(const Generator& f, double n, double C, double t, double y, std::span<const double> z) {
    if (!(n >= C) || !(n > 0.0)) throw InvalidArgument("inf-convolution needs n >= C");
    const std::size_t d = z.size();
    const double fz = f(t, y, z);
    const double zn = norm(z);
    // Joint variable (p, q).
    std::vector<double> center(d + 1);
    center[0] = y;
    std::copy(z.begin(), z.end(), center.begin() + 1);
    std::vector<double> qbuf(d);
    auto obj = [&](const std::vector<double>& pq) {
        std::copy(pq.begin() + 1, pq.end(), qbuf.begin());
        double dist2 = 0.0;
        for (std::size_t k = 0; k < d; ++k) dist2 += (z[k] - qbuf[k]) * (z[k] - qbuf[k]);
        return -(f(t, pq[0], qbuf) + n * std::abs(y - pq[0]) + n * std::sqrt(dist2));
    };
    std::vector<std::vector<double>> extra;
    std::vector<double> origin(d + 1, 0.0);
    origin[0] = y;
    extra.push_back(origin);
    const double slack = std::max(n - C, 0.5 * n);
    const double R = (2.0 * std::abs(fz) + 2.0 * C * (1.0 + std::abs(y) + zn * zn) + 2.0) / slack;
    const double v1 = -grid_zoom_max(obj, center, R, extra);
    const double v2 = -grid_zoom_max(obj, center, 2.0 * R, extra);
    return std::min(v1, v2);
}

Generator sup_convolution(Generator f, double n, double C) {
    if (!(n > C)) throw InvalidArgument("sup-convolution needs n > C");
    return [f = std::move(f), n, C](double t, double y, std::span<const double> z) { return sup_convolve(f, n, C, t, y, z); };
}

Generator inf_convolution(Generator f, double n, double C) {
    if (!(n >= C) || !(n > 0.0)) throw InvalidArgument("inf-convolution needs n >= C");
    return [f = std::move(f), n, C](double t, double y, std::span<const double> z) { return inf_convolve(f, n, C, t, y, z); };
}

double smooth_cutoff(std::span<const double> z, double n) {
    const double r = norm(z);
    if (r <= n) return 1.0;
    if (r >= n + 1.0) return 0.0;
    const double s = r - n;
    return 1.0 - 3.0 * s * s + 2.0 * s * s * s;
}

double hat_truncation(double y, double cbar) {
    const double a = std::abs(y);
    if (a <= cbar) return 1.0;
    if (a >= 2.0 * cbar) return 0.0;
    return (2.0 * cbar - a) / cbar;
}

Generator truncate_general_growth(Generator f, double cbar) {
    if (!(cbar > 0.0)) throw InvalidArgument("truncation level must be positive");
    return [f = std::move(f), cbar](double t, double y, std::span<const double> z) {
        const double rho = hat_truncation(y, cbar);
        return rho == 0.0 ? 0.0 : rho * f(t, y, z);
    };
}

double penalty_term(double y, double s, double n, PenaltyForm form) {
    if (form == PenaltyForm::linear) return n * (s - y);
    return y < s ? n * (s - y) : 0.0;
}

std::function<double(double, double, std::span<const double>, double)> penalize_obstacle(Generator f, double n,
                                                                                          PenaltyForm form) {
    if (n < 0.0) throw InvalidArgument("penalty level must be non-negative");
    return [f = std::move(f), n, form](double t, double y, std::span<const double> z, double s) {
        return f(t, y, z) + penalty_term(y, s, n, form);
    };
}

Problem exp_transform(const Problem& p, double mu) {
    Problem q = p;
    const double T = p.T;
    q.xi = [xi = p.xi, mu, T](const NodeState& s) { return std::exp(mu * T) * xi(s); };
    q.f = [f = p.f, mu](double t, double y, std::span<const double> z) {
        const double e = std::exp(-mu * t);
        std::array<double, 8> zb{};
        std::vector<double> zv;
        std::span<double> zs;
        if (z.size() <= zb.size()) {
            zs = std::span<double>(zb.data(), z.size());
        } else {
            zv.resize(z.size());
            zs = zv;
        }
        for (std::size_t k = 0; k < z.size(); ++k) zs[k] = e * z[k];
        return f(t, e * y, zs) / e - mu * y;
    };
    if (p.g) {
        q.g = [g = p.g, mu](double t, double y, std::span<const double> z, std::span<double> out) {
            const double e = std::exp(-mu * t);
            std::vector<double> zs(z.begin(), z.end());
            for (double& v : zs) v *= e;
            g(t, e * y, zs, out);
            for (double& v : out) v /= e;
        };
    }
    if (p.S) q.S = [S = *p.S, mu](const NodeState& s) { return std::exp(mu * s.t) * S(s); };
    q.mu = p.mu - mu;
    if (p.xi_bound) q.xi_bound = std::exp(mu * T) * *p.xi_bound;
    return q;
}

StrTransform str_transform(const Problem& p, double A, double B, double M) {
    if (!(A > 0.0) || !(B > 0.0)) throw InvalidArgument("change-of-variable constants A and B must be positive");
    StrTransform out;
    // (1/B) ln(e^{ABu+1}/A) - M, expanded so large arguments do not overflow.
    out.phi = [A, B, M](double u) { return (A * B * u + 1.0 - std::log(A)) / B - M; };
    out.phi_inv = [A, B, M](double y) {
        if (!std::isfinite(y)) throw InvalidArgument("value outside the range of the change of variable");
        return (B * (y + M) - 1.0 + std::log(A)) / (A * B);
    };
    out.dphi = [A](double) { return A; };
    out.d2phi = [](double) { return 0.0; };

    Problem q = p;
    auto phi = out.phi, phi_inv = out.phi_inv, dphi = out.dphi, d2phi = out.d2phi;
    q.xi = [xi = p.xi, phi_inv](const NodeState& s) { return phi_inv(xi(s)); };
    if (p.S) q.S = [S = *p.S, phi_inv](const NodeState& s) { return phi_inv(S(s)); };
    auto gt = [g = p.g, phi, dphi, l = p.l](double t, double yt, std::span<const double> zt, std::vector<double>& out_g) {
        out_g.assign(l, 0.0);
        if (!g) return;
        const double d1 = dphi(yt);
        std::vector<double> z(zt.begin(), zt.end());
        for (double& v : z) v *= d1;
        g(t, phi(yt), z, out_g);
        for (double& v : out_g) v /= d1;
    };
    if (p.g) {
        q.g = [gt](double t, double y, std::span<const double> z, std::span<double> out_g) {
            std::vector<double> tmp;
            gt(t, y, z, tmp);
            std::copy(tmp.begin(), tmp.end(), out_g.begin());
        };
    }
    q.f = [f = p.f, gt, phi, dphi, d2phi](double t, double yt, std::span<const double> zt) {
        const double d1 = dphi(yt);
        const double d2 = d2phi(yt);
        std::vector<double> z(zt.begin(), zt.end());
        double z2 = 0.0;
        for (double& v : z) {
            z2 += v * v;
            v *= d1;
        }
        double g2 = 0.0;
        if (d2 != 0.0) {
            std::vector<double> gv;
            gt(t, yt, zt, gv);
            for (double v : gv) g2 += v * v;
        }
        return (f(t, phi(yt), z) + 0.5 * d2 * (z2 - g2)) / d1;
    };
    q.xi_bound.reset();
    out.problem = std::move(q);
    return out;
}

}  // namespace bdsde
