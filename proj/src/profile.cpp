#include <algorithm>
#include <cmath>
#include <limits>

#include "bdsde/coefficients.hpp"
#include "bdsde/error.hpp"
#include "bdsde/noise.hpp"

namespace bdsde {

namespace {

constexpr const char* tag_names[] = {"F1", "F2", "F3", "F4", "G1", "G2", "G4", "STR", "S1", "S2", "A1", "A2"};
constexpr double fd_step = 1e-5;

double uniform(std::uint64_t seed, std::uint64_t i, std::uint64_t k) {
    return (static_cast<double>(counter_hash(seed, 17, i, k, 0) >> 11) + 0.5) * 0x1.0p-53;
}

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

struct Sample {
    double t;
    double y;
    std::vector<double> z;
};

class Checker {
public:
    explicit Checker(ProfileReport& r) : report_(r) {}
    InequalityReport& get(const std::string& name) {
        for (auto& q : report_.inequalities)
            if (q.name == name) return q;
        report_.inequalities.push_back({name});
        return report_.inequalities.back();
    }
    // Records lhs <= rhs; the margin is scaled so large magnitudes do not flag rounding.
    void record(const std::string& name, double lhs, double rhs) {
        auto& q = get(name);
        const double margin = lhs - rhs;
        q.worst_margin = std::max(q.worst_margin, margin);
        ++q.samples;
        if (margin > 1e-9 * (1.0 + std::abs(lhs) + std::abs(rhs))) ++q.violations;
    }

private:
    ProfileReport& report_;
};

double param(const AssumptionProfile& pr, const std::string& key, double fallback) {
    auto it = pr.constants.find(key);
    return it == pr.constants.end() ? fallback : it->second;
}

TimeFunction fn(const AssumptionProfile& pr, const std::string& key) {
    auto it = pr.functions.find(key);
    if (it == pr.functions.end()) throw InvalidArgument("profile " + to_string(pr.tag) + " needs function '" + key + "'");
    return it->second;
}

std::vector<double> g_eval(const Problem& p, double t, double y, std::span<const double> z) {
    std::vector<double> out(p.l, 0.0);
    if (p.g) p.g(t, y, z, out);
    return out;
}

}  // namespace

std::string to_string(ProfileTag tag) { return tag_names[static_cast<int>(tag)]; }

ProfileTag parse_profile_tag(const std::string& name) {
    for (int i = 0; i < 12; ++i)
        if (name == tag_names[i]) return static_cast<ProfileTag>(i);
    throw InvalidArgument("unknown assumption profile '" + name + "'");
}

std::size_t ProfileReport::total_violations() const {
    std::size_t n = 0;
    for (const auto& q : inequalities) n += q.violations;
    return n;
}

ProfileReport profile_check(const Problem& p, const AssumptionProfile& pr, std::size_t samples, std::uint64_t seed) {
    ProfileReport report;
    report.tag = pr.tag;
    Checker ck(report);
    const double ry = param(pr, "M", 5.0);
    const double rz = param(pr, "zmax", 5.0);
    const int d = p.d;

    // Fixed corner points first, then pseudo-random points.
    std::vector<Sample> pts;
    const double ys[] = {0.0, 1.0, -1.0, 2.0, -2.0, ry, -ry};
    const double zs[] = {0.0, 1.0, -1.0, 2.0, -2.0};
    for (double y : ys)
        for (double z : zs) {
            if (std::abs(y) > ry || std::abs(z) > rz) continue;
            pts.push_back({0.5 * p.T, y, std::vector<double>(d, z)});
        }
    for (std::size_t i = 0; i < samples; ++i) {
        Sample s{p.T * uniform(seed, i, 0), ry * (2.0 * uniform(seed, i, 1) - 1.0), std::vector<double>(d)};
        for (int k = 0; k < d; ++k) s.z[k] = rz * (2.0 * uniform(seed, i, 2 + k) - 1.0);
        pts.push_back(std::move(s));
    }
    std::vector<double> zero(d, 0.0);
    const double C = param(pr, "C", p.C);
    const double alpha = param(pr, "alpha", p.alpha);
    const double mu = param(pr, "mu", p.mu);

    auto partner = [&](std::size_t i) {
        const Sample& a = pts[i];
        return pts[(i * 7 + 3) % pts.size()].y + (a.y == pts[(i * 7 + 3) % pts.size()].y ? 0.5 : 0.0);
    };

    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto& s = pts[i];
        const double t = s.t, y = s.y;
        const std::span<const double> z = s.z;
        const double zn = std::sqrt(norm2(z));
        const double yp = partner(i);
        switch (pr.tag) {
            case ProfileTag::F1: {
                const double fv = std::abs(p.f(t, y, z));
                ck.record("growth |f| <= |f(t,0,0)| + phi(|y|) + C|z|", fv,
                          std::abs(p.f(t, 0.0, zero)) + p.phi_at(std::abs(y)) + C * zn);
                ck.record("monotone (f(y)-f(y'))(y-y') <= mu (y-y')^2", (p.f(t, y, z) - p.f(t, yp, z)) * (y - yp),
                          mu * (y - yp) * (y - yp));
                break;
            }
            case ProfileTag::F2:
                ck.record("growth |f| <= C(1+|y|+|z|^2)", std::abs(p.f(t, y, z)), C * (1.0 + std::abs(y) + zn * zn));
                break;
            case ProfileTag::F3:
                ck.record("growth |f| <= phi(|y|) + C|z|^2", std::abs(p.f(t, y, z)), p.phi_at(std::abs(y)) + C * zn * zn);
                ck.record("monotone (f(y)-f(y'))(y-y') <= mu (y-y')^2", (p.f(t, y, z) - p.f(t, yp, z)) * (y - yp),
                          mu * (y - yp) * (y - yp));
                break;
            case ProfileTag::F4: {
                const double eps = param(pr, "eps", 1.0);
                ck.record("|f| <= k1 + C|z|^2", std::abs(p.f(t, y, z)), fn(pr, "k1")(t) + C * zn * zn);
                const double dfy = (p.f(t, y + fd_step, z) - p.f(t, y - fd_step, z)) / (2 * fd_step);
                ck.record("df/dy <= keps + eps|z|^2", dfy, fn(pr, "keps")(t) + eps * zn * zn);
                std::vector<double> zp(z.begin(), z.end()), zm(z.begin(), z.end());
                double g2 = 0.0;
                for (int k = 0; k < d; ++k) {
                    zp[k] += fd_step;
                    zm[k] -= fd_step;
                    const double dk = (p.f(t, y, zp) - p.f(t, y, zm)) / (2 * fd_step);
                    g2 += dk * dk;
                    zp[k] = z[k];
                    zm[k] = z[k];
                }
                ck.record("|df/dz| <= k2 + C|z|^2", std::sqrt(g2), fn(pr, "k2")(t) + C * zn * zn);
                break;
            }
            case ProfileTag::G1: {
                const Sample& o = pts[(i * 11 + 5) % pts.size()];
                const auto g1 = g_eval(p, t, y, z);
                const auto g2 = g_eval(p, t, o.y, o.z);
                double diff = 0.0, dz = 0.0;
                for (int j = 0; j < p.l; ++j) diff += (g1[j] - g2[j]) * (g1[j] - g2[j]);
                for (int k = 0; k < d; ++k) dz += (z[k] - o.z[k]) * (z[k] - o.z[k]);
                ck.record("|g(y,z)-g(y',z')|^2 <= C|y-y'|^2 + alpha|z-z'|^2", diff,
                          C * (y - o.y) * (y - o.y) + alpha * dz);
                break;
            }
            case ProfileTag::G2: {
                const auto gv = g_eval(p, t, y, z);
                const double lam = p.lambda_at(t);
                ck.record("|g|^2 <= lambda^2 + alpha|z|^2", norm2(gv), lam * lam + alpha * zn * zn);
                break;
            }
            case ProfileTag::G4: {
                const auto gp = g_eval(p, t, y + fd_step, z), gm = g_eval(p, t, y - fd_step, z);
                double dy2 = 0.0;
                for (int j = 0; j < p.l; ++j) dy2 += std::pow((gp[j] - gm[j]) / (2 * fd_step), 2);
                ck.record("|dg/dy| <= C", std::sqrt(dy2), C);
                double dz2 = 0.0;
                std::vector<double> zp(z.begin(), z.end()), zm(z.begin(), z.end());
                for (int k = 0; k < d; ++k) {
                    zp[k] += fd_step;
                    zm[k] -= fd_step;
                    const auto a = g_eval(p, t, y, zp), b = g_eval(p, t, y, zm);
                    for (int j = 0; j < p.l; ++j) dz2 += std::pow((a[j] - b[j]) / (2 * fd_step), 2);
                    zp[k] = z[k];
                    zm[k] = z[k];
                }
                ck.record("|dg/dz| <= alpha", std::sqrt(dz2), alpha);
                break;
            }
            case ProfileTag::STR: {
                const double a = param(pr, "a", 1.0);
                const double dfy = (p.f(t, y + fd_step, z) - p.f(t, y - fd_step, z)) / (2 * fd_step);
                std::vector<double> zp(z.begin(), z.end()), zm(z.begin(), z.end());
                double g2 = 0.0;
                for (int k = 0; k < d; ++k) {
                    zp[k] += fd_step;
                    zm[k] -= fd_step;
                    const double dk = (p.f(t, y, zp) - p.f(t, y, zm)) / (2 * fd_step);
                    g2 += dk * dk;
                    zp[k] = z[k];
                    zm[k] = z[k];
                }
                ck.record("df/dy + a|df/dz|^2 <= b(t)", dfy + a * g2, fn(pr, "b")(t));
                break;
            }
            default: break;
        }
    }

    // Path-based tags: terminal value and obstacle on sampled Gaussian paths.
    if (pr.tag == ProfileTag::S1 || pr.tag == ProfileTag::S2 || pr.tag == ProfileTag::A1 ||
        pr.tag == ProfileTag::A2) {
        const std::size_t N = 16;
        const auto grid = make_grid(p.T, N);
        const std::size_t M = std::max<std::size_t>(samples, 1);
        const auto paths = sample_paths(grid, p.d, p.l, M, seed, Law::gaussian);
        const double bound = param(pr, "bound", std::numeric_limits<double>::infinity());
        double sum_sq = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            std::vector<double> w(p.d, 0.0);
            double btail = 0.0;
            for (std::size_t i = 0; i < N; ++i) btail += paths->dB(i, m, 0);
            double sup_s = 0.0, sup_exp_pos = 0.0;
            for (std::size_t i = 0; i <= N; ++i) {
                const double db = i < N ? paths->dB(i, m, 0) : 0.0;
                NodeState st{grid.t(i), w, btail, db};
                if (p.S) {
                    const double s = (*p.S)(st);
                    sup_s = std::max(sup_s, std::abs(s));
                    sup_exp_pos = std::max(sup_exp_pos, std::exp(p.mu * grid.t(i)) * std::max(s, 0.0));
                }
                if (i < N) {
                    for (int k = 0; k < p.d; ++k) w[k] += paths->dW(i, m, k);
                    btail -= db;
                }
            }
            const double xi = p.xi(NodeState{p.T, w, 0.0, 0.0});
            switch (pr.tag) {
                case ProfileTag::A1: sum_sq += xi * xi; break;
                case ProfileTag::A2: ck.record("|xi| <= declared bound", std::abs(xi), bound); break;
                case ProfileTag::S1: {
                    const double ph = p.phi_at(sup_exp_pos);
                    sum_sq += ph * ph;
                    break;
                }
                case ProfileTag::S2: ck.record("sup|S| <= declared bound", sup_s, bound); break;
                default: break;
            }
            if (p.S) {
                const double sT = (*p.S)(NodeState{p.T, w, 0.0, 0.0});
                ck.record("S_T <= xi", sT, xi);
            }
        }
        if (pr.tag == ProfileTag::A1 || pr.tag == ProfileTag::S1) {
            const double m2 = sum_sq / static_cast<double>(M);
            ck.record(pr.tag == ProfileTag::A1 ? "E[xi^2] finite" : "E[phi^2(sup e^{mu t} S^+)] finite",
                      std::isfinite(m2) ? 0.0 : 1.0, 0.0);
        }
    }
    return report;
}

}  // namespace bdsde
