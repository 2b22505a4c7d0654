#include "bdsde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bdsde/calculus.hpp"
#include "bdsde/envelopes.hpp"
#include "bdsde/error.hpp"
#include "bdsde/parallel.hpp"
#include "bdsde/verify.hpp"

namespace bdsde {

std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::explicit_step: return "explicit";
        case Scheme::inner_picard: return "inner-picard";
        case Scheme::implicit_step: return "implicit";
    }
    return "explicit";
}

double Solution::root() const { return pairwise_mean(Y.front()); }

double Solution::max_abs_Y() const {
    double m = 0.0;
    for (const auto& s : Y)
        for (double v : s) m = std::max(m, std::abs(v));
    return m;
}

std::vector<double> Solution::K_mean() const {
    std::vector<double> K(grid.N + 1, 0.0);
    if (!reflected()) return K;
    for (std::size_t i = 0; i < grid.N; ++i) K[i + 1] = K[i] + pairwise_mean(dK[i]);
    return K;
}

std::vector<std::vector<double>> obstacle_values(const Obstacle& S, const Backend& be) {
    const std::size_t N = be.grid().N;
    std::vector<std::vector<double>> out(N + 1);
    for (std::size_t i = 0; i <= N; ++i) {
        out[i].resize(be.nodes(i));
        parallel_for(be.nodes(i), [&](std::size_t b, std::size_t e) {
            std::vector<double> w(be.d());
            double bt = 0.0, db = 0.0;
            for (std::size_t n = b; n < e; ++n) {
                be.state(i, n, w, bt, db);
                out[i][n] = S(NodeState{be.grid().t(i), w, bt, db});
            }
        });
    }
    return out;
}

namespace {

enum class Reflection { none, projection, penalty };

struct Rule {
    Reflection kind = Reflection::none;
    double n = 0.0;
    PenaltyForm form = PenaltyForm::positive_part;
};

void check_finite(std::span<const double> v, std::size_t i, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw NumericalFailure(std::string("non-finite ") + what, i);
}

std::string lipschitz_warning(const Problem& p, double dt) {
    std::vector<double> z(p.d, 0.0);
    double lip = 0.0;
    for (double y : {-1.0, 0.0, 1.0}) {
        const double h = 1e-4;
        lip = std::max(lip, std::abs(p.f(0.0, y + h, z) - p.f(0.0, y - h, z)) / (2 * h));
    }
    if (dt * lip > 0.5) {
        std::ostringstream os;
        os << "dt * Lip_y(f) = " << dt * lip << " exceeds 0.5; the explicit step may be inaccurate";
        return os.str();
    }
    return {};
}

// One backward sweep. With `frozen`, g is evaluated on (U, V) = frozen and the
// z-argument of f is V_i (Picard map); otherwise on the running solution.
Solution sweep(const Problem& p, const SharedBackend& bp, const SolveOptions& opts, const Rule& rule,
               const Solution* frozen, const char* name) {
    p.validate();
    const Backend& be = *bp;
    if (be.d() != p.d || be.l() != p.l) throw InvalidArgument("backend dimensions do not match the problem");
    if (std::abs(be.grid().T - p.T) > 1e-12 * p.T) throw InvalidArgument("backend horizon does not match the problem");
    if (rule.kind != Reflection::none && !p.S) throw InvalidArgument("reflected solver needs an obstacle");
    const TimeGrid& grid = be.grid();
    const std::size_t N = grid.N;
    const double dt = grid.dt;
    const int d = p.d, l = p.l;
    const std::size_t B = be.branches();

    Solution sol;
    sol.backend = bp;
    sol.grid = grid;
    sol.d = d;
    sol.options = opts;
    sol.solver = name;
    sol.Y.resize(N + 1);
    sol.Z.resize(N + 1);
    sol.inner_iterations.assign(N, 0);
    if (rule.kind != Reflection::none) sol.dK.resize(N + 1);
    if (opts.scheme == Scheme::explicit_step && !frozen) {
        auto w = lipschitz_warning(p, dt);
        if (!w.empty()) sol.warnings.push_back(w);
    }

    std::vector<std::vector<double>> Sv;
    if (rule.kind != Reflection::none) Sv = obstacle_values(*p.S, be);

    // Terminal slice.
    {
        const std::size_t n = be.nodes(N);
        sol.Y[N].resize(n);
        sol.Z[N].assign(n * d, 0.0);
        std::vector<double> w(d);
        double bt = 0.0, db = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            be.state(N, k, w, bt, db);
            sol.Y[N][k] = p.xi(NodeState{grid.T, w, 0.0, 0.0});
        }
        check_finite(sol.Y[N], N, "terminal value");
        if (rule.kind != Reflection::none) {
            sol.dK[N].assign(n, 0.0);
            for (std::size_t k = 0; k < n; ++k)
                if (Sv[N][k] > sol.Y[N][k] + 1e-12)
                    throw InvalidArgument("obstacle exceeds the terminal value at T");
        }
    }

    const Solution& gsrc = frozen ? *frozen : sol;
    std::vector<double> gnext, base, zt, yt;
    for (std::size_t i = N; i-- > 0;) {
        const std::size_t np = be.nodes(i), nc = be.nodes(i + 1);
        const double t = grid.t(i), t1 = grid.t(i + 1);

        // g at slice i+1.
        gnext.assign(nc * l, 0.0);
        if (p.g) {
            parallel_for(nc, [&](std::size_t b, std::size_t e) {
                for (std::size_t c = b; c < e; ++c)
                    p.g(t1, gsrc.Y[i + 1][c], std::span<const double>(gsrc.Z[i + 1].data() + c * d, d),
                        std::span<double>(gnext.data() + c * l, l));
            });
        }

        // Base value Y_{i+1} + g dB per (node, branch) and the Z targets.
        base.assign(np * B, 0.0);
        zt.assign(np * B * d, 0.0);
        parallel_for(np, [&](std::size_t b, std::size_t e) {
            for (std::size_t n = b; n < e; ++n)
                for (std::size_t j = 0; j < B; ++j) {
                    const std::size_t c = be.child(i, n, j);
                    double v = sol.Y[i + 1][c];
                    for (int q = 0; q < l; ++q) v += gnext[c * l + q] * be.dB(i, n, j, q);
                    base[n * B + j] = v;
                    for (int k = 0; k < d; ++k) zt[(n * B + j) * d + k] = v * be.dW(i, n, j, k) / dt;
                }
        });
        auto& Zi = sol.Z[i];
        Zi.assign(np * d, 0.0);
        be.expect(i, zt, d, Zi);
        check_finite(Zi, i, "Z");

        // Z fed to f: the running Z_i, or V_i under the Picard map.
        const std::vector<double>& zf = frozen ? frozen->Z[i] : Zi;

        auto& Yi = sol.Y[i];
        Yi.assign(np, 0.0);
        if (opts.scheme == Scheme::explicit_step || opts.scheme == Scheme::inner_picard) {
            yt.assign(np * B, 0.0);
            parallel_for(np, [&](std::size_t b, std::size_t e) {
                for (std::size_t n = b; n < e; ++n) {
                    const std::span<const double> z(zf.data() + n * d, d);
                    for (std::size_t j = 0; j < B; ++j) {
                        const std::size_t c = be.child(i, n, j);
                        yt[n * B + j] = base[n * B + j] + p.f(t, sol.Y[i + 1][c], z) * dt;
                    }
                }
            });
            be.expect(i, yt, 1, Yi);
        }
        if (opts.scheme == Scheme::inner_picard || opts.scheme == Scheme::implicit_step) {
            std::vector<double> eb(np);
            be.expect(i, base, 1, eb);
            if (opts.scheme == Scheme::inner_picard) {
                for (int it = 0; it < opts.inner_iterations; ++it)
                    parallel_for(np, [&](std::size_t b, std::size_t e) {
                        for (std::size_t n = b; n < e; ++n)
                            Yi[n] = eb[n] + p.f(t, Yi[n], std::span<const double>(zf.data() + n * d, d)) * dt;
                    });
                sol.inner_iterations[i] = opts.inner_iterations;
            } else {
                parallel_for(np, [&](std::size_t b, std::size_t e) {
                    for (std::size_t n = b; n < e; ++n) {
                        const std::span<const double> z(zf.data() + n * d, d);
                        Yi[n] = yosida_resolvent([&](double y) { return p.f(t, y, z); }, dt, eb[n]);
                    }
                });
                sol.inner_iterations[i] = 1;
            }
        }
        check_finite(Yi, i, "Y");

        if (rule.kind != Reflection::none) {
            auto& dK = sol.dK[i];
            dK.assign(np, 0.0);
            const auto& S = Sv[i];
            const double nd = rule.n * dt;
            for (std::size_t n = 0; n < np; ++n) {
                const double cand = Yi[n];
                double y = cand;
                if (rule.kind == Reflection::projection) {
                    y = std::max(cand, S[n]);
                } else if (rule.form == PenaltyForm::linear || cand < S[n]) {
                    y = (cand + nd * S[n]) / (1.0 + nd);
                }
                Yi[n] = y;
                dK[n] = y - cand;
            }
            check_finite(Yi, i, "reflected Y");
        }
    }
    return sol;
}

}  // namespace

Solution solve_backward(const Problem& p, const SharedBackend& be, const SolveOptions& opts) {
    return sweep(p, be, opts, Rule{}, nullptr, "backward");
}

Solution solve_reflected_projection(const Problem& p, const SharedBackend& be, const SolveOptions& opts) {
    return sweep(p, be, opts, Rule{Reflection::projection}, nullptr, "projection");
}

Solution solve_reflected_penalized(const Problem& p, double n, const SharedBackend& be, const SolveOptions& opts,
                                   PenaltyForm form) {
    if (n < 0.0) throw InvalidArgument("penalty level must be non-negative");
    return sweep(p, be, opts, Rule{Reflection::penalty, n, form}, nullptr, "penalized");
}

double auto_gamma(double C, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0,1)");
    return 2.0 * C * C / (1.0 - alpha) + 2.0 * C / (1.0 + alpha);
}

Solution picard_step(const Problem& p, const SharedBackend& be, const Solution& frozen) {
    return sweep(p, be, SolveOptions{}, Rule{}, &frozen, "picard");
}

double weighted_distance(const Solution& a, const Solution& b, double gamma) {
    if (!(a.grid == b.grid) || a.Y.size() != b.Y.size()) throw InvalidArgument("iterates live on different grids");
    double total = 0.0;
    const double dt = a.grid.dt;
    for (std::size_t i = 0; i <= a.grid.N; ++i) {
        const std::size_t n = a.Y[i].size();
        if (b.Y[i].size() != n) throw InvalidArgument("iterates have different node counts");
        std::vector<double> v(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double dy = a.Y[i][k] - b.Y[i][k];
            double dz = 0.0;
            for (int q = 0; q < a.d; ++q) {
                const double e = a.Z[i][k * a.d + q] - b.Z[i][k * a.d + q];
                dz += e * e;
            }
            v[k] = dy * dy + dz * dt;
        }
        total += std::exp(gamma * a.grid.t(i)) * pairwise_mean(v);
    }
    return total;
}

PicardResult picard_outer(const Problem& p, const SharedBackend& be, int iterations, std::optional<double> gamma) {
    if (iterations < 1) throw InvalidArgument("picard_outer needs at least one iteration");
    PicardResult r;
    r.gamma = gamma ? *gamma : auto_gamma(p.C, p.alpha);
    Solution zero;
    zero.backend = be;
    zero.grid = be->grid();
    zero.d = p.d;
    zero.solver = "picard-start";
    for (std::size_t i = 0; i <= zero.grid.N; ++i) {
        zero.Y.emplace_back(be->nodes(i), 0.0);
        zero.Z.emplace_back(be->nodes(i) * p.d, 0.0);
    }
    r.iterates.push_back(std::move(zero));
    int growing = 0;
    for (int k = 0; k < iterations; ++k) {
        r.iterates.push_back(picard_step(p, be, r.iterates.back()));
        const auto& a = r.iterates[r.iterates.size() - 1];
        const auto& b = r.iterates[r.iterates.size() - 2];
        r.distances.push_back(weighted_distance(a, b, r.gamma));
        if (r.distances.size() >= 2) {
            const double prev = r.distances[r.distances.size() - 2];
            const double ratio = prev > 0.0 ? r.distances.back() / prev : 0.0;
            r.ratios.push_back(ratio);
            growing = ratio > 1.5 ? growing + 1 : 0;
            if (growing >= 3) throw NumericalFailure("Picard iteration diverges (ratio above 1.5 three times in a row)");
        }
    }
    return r;
}

std::string to_string(LadderMode m) {
    switch (m) {
        case LadderMode::sup_conv: return "sup-conv";
        case LadderMode::inf_conv: return "inf-conv";
        case LadderMode::penalized: return "penalized-reflected";
    }
    return "sup-conv";
}

LadderMode parse_ladder_mode(const std::string& s) {
    if (s == "sup-conv") return LadderMode::sup_conv;
    if (s == "inf-conv") return LadderMode::inf_conv;
    if (s == "penalized-reflected" || s == "penalized") return LadderMode::penalized;
    throw InvalidArgument("unknown ladder mode '" + s + "'");
}

LadderResult maximal_ladder(const Problem& p, const std::vector<double>& schedule, LadderMode mode,
                            const SharedBackend& be, const SolveOptions& opts, double tol) {
    if (schedule.size() < 2) throw InvalidArgument("a ladder needs at least two rungs");
    for (std::size_t k = 1; k < schedule.size(); ++k)
        if (!(schedule[k] > schedule[k - 1])) throw InvalidArgument("ladder schedule must be increasing");
    LadderResult out;
    for (double n : schedule) {
        Problem q = p;
        switch (mode) {
            case LadderMode::sup_conv:
                q.f = sup_convolution(p.f, n, p.C);
                out.rungs.push_back(solve_backward(q, be, opts));
                break;
            case LadderMode::inf_conv:
                q.f = inf_convolution(p.f, n, p.C);
                out.rungs.push_back(solve_backward(q, be, opts));
                break;
            case LadderMode::penalized:
                out.rungs.push_back(solve_reflected_penalized(p, n, be, opts));
                break;
        }
    }
    const auto dir = mode == LadderMode::sup_conv ? Direction::non_increasing : Direction::non_decreasing;
    const auto mon = monotone_monitor(out.rungs, dir, tol);
    out.report.schedule = schedule;
    out.report.roots = mon.roots;
    out.report.gaps = mon.gaps;
    out.report.order_violations = mon.violations;
    out.report.worst_violation = mon.worst_violation;
    out.report.gaps_shrinking_tail = mon.gaps_shrinking_tail;
    return out;
}

PipelineResult quadratic_pipeline(const Problem& p, const SharedBackend& be, const SolveOptions& opts) {
    p.validate();
    if (!p.xi_bound) throw InvalidArgument("quadratic pipeline needs a declared bound on the terminal value");
    PipelineResult r;
    const double dt = be->grid().dt;
    if (!p.S) {
        r.cbar = power_bound(p.phi_at(0.0), p.mu, p.T, *p.xi_bound);
        Problem q = p;
        q.f = truncate_general_growth(p.f, r.cbar);
        r.solution = solve_backward(q, be, opts);
        r.max_abs_Y = r.solution.max_abs_Y();
    } else {
        // Shift by b = sup|S| so the obstacle becomes non-positive.
        const auto Sv = obstacle_values(*p.S, *be);
        double b = 0.0;
        for (const auto& s : Sv)
            for (double v : s) b = std::max(b, std::abs(v));
        r.shift = b;
        Problem q = p;
        q.xi = [xi = p.xi, b](const NodeState& s) { return xi(s) - b; };
        q.S = [S = *p.S, b](const NodeState& s) { return S(s) - b; };
        if (p.g)
            q.g = [g = p.g, b](double t, double y, std::span<const double> z, std::span<double> o) { g(t, y + b, z, o); };
        const Generator shifted = [f = p.f, b](double t, double y, std::span<const double> z) { return f(t, y + b, z); };
        r.cbar = power_bound(p.phi_at(b), p.mu, p.T, *p.xi_bound + b);
        q.f = truncate_general_growth(shifted, r.cbar);
        q.xi_bound = *p.xi_bound + b;
        Solution s = solve_reflected_projection(q, be, opts);
        r.max_abs_Y = s.max_abs_Y();
        for (auto& slice : s.Y)
            for (double& v : slice) v += b;
        s.solver = "pipeline-reflected";
        r.solution = std::move(s);
    }
    r.exceedance = std::max(0.0, r.max_abs_Y - r.cbar);
    if (r.exceedance > 10.0 * dt * r.cbar) {
        std::ostringstream os;
        os << "solution leaves the a-priori bound: max|Y| = " << r.max_abs_Y << " > " << r.cbar;
        throw NumericalFailure(os.str());
    }
    if (r.solution.solver == "backward") r.solution.solver = "pipeline";
    return r;
}

Solution exp_map_back(const Solution& s, double mu) {
    Solution out = s;
    for (std::size_t i = 0; i <= s.grid.N; ++i) {
        const double e = std::exp(-mu * s.grid.t(i));
        for (double& v : out.Y[i]) v *= e;
        for (double& v : out.Z[i]) v *= e;
        if (out.reflected())
            for (double& v : out.dK[i]) v *= e;
    }
    return out;
}

}  // namespace bdsde
