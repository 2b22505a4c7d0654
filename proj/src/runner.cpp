#include "bdsde/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bdsde/envelopes.hpp"
#include "bdsde/error.hpp"
#include "bdsde/verify.hpp"

namespace bdsde {

namespace {

double param_or(const CheckSpec& c, const std::string& key, double fallback) {
    auto it = c.params.find(key);
    if (it == c.params.end() || it->second == "auto") return fallback;
    try {
        std::size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw InvalidArgument("check " + c.name + ": '" + it->second + "' is not a number");
    }
}

std::string param_str(const CheckSpec& c, const std::string& key, const std::string& fallback) {
    auto it = c.params.find(key);
    return it == c.params.end() ? fallback : it->second;
}

std::vector<double> parse_schedule(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw InvalidArgument("bad ladder schedule entry '" + item + "'");
        }
    }
    if (out.size() < 2) throw InvalidArgument("ladder schedule needs at least two rungs");
    return out;
}

TimeFunction time_fn(const std::string& src) {
    Expr x = parse_expr(src);
    return [x](double t) { return eval_expr(x, EvalContext{}.set(slot::t, t)); };
}

struct Solved {
    Solution sol;
    std::optional<PipelineResult> pipeline;
};

Solved solve_main(const Scenario& s, const Problem& p, const SharedBackend& be) {
    Solved out;
    if (s.solver == "backward") {
        out.sol = solve_backward(p, be, s.solve);
    } else if (s.solver == "projection") {
        out.sol = solve_reflected_projection(p, be, s.solve);
    } else if (s.solver == "penalized") {
        if (!(s.penalty > 0.0)) throw InvalidArgument("penalized solver needs penalty > 0");
        out.sol = solve_reflected_penalized(p, s.penalty, be, s.solve, s.penalty_form);
    } else {
        out.pipeline = quadratic_pipeline(p, be, s.solve);
        out.sol = out.pipeline->solution;
    }
    return out;
}

double mean_of(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

}  // namespace

bool RunResult::all_pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

void apply_overrides(Scenario& s, const RunOverrides& o) {
    if (o.paths) {
        if (*o.paths < 1) throw InvalidArgument("--paths must be positive");
        s.M = *o.paths;
    }
    if (o.steps) {
        if (*o.steps < 1) throw InvalidArgument("--steps must be positive");
        s.N = *o.steps;
    }
    if (o.seed) s.seed = *o.seed;
    if (o.backend && *o.backend != s.backend) {
        s.backend = *o.backend;
        const bool explicit_law = s.sections.count("numerics") && s.sections.at("numerics").count("law");
        if (s.backend == BackendKind::tree) s.law = Law::rademacher;
        else if (!explicit_law) s.law = Law::gaussian;
    }
    if (o.out_dir) s.out_dir = *o.out_dir;
    if (s.backend == BackendKind::tree) {
        if (s.d != 1 || s.l != 1) throw InvalidArgument("tree backend needs d = l = 1");
        if (s.N > 20) throw InvalidArgument("tree backend is capped at N = 20");
        if (s.law != Law::rademacher) throw InvalidArgument("tree backend needs the rademacher law");
    }
}

SharedBackend make_backend(const Scenario& s) {
    const TimeGrid grid = make_grid(s.T, static_cast<long long>(s.N));
    if (s.backend == BackendKind::tree) return std::make_shared<TreeBackend>(grid);
    SharedPaths paths = s.shared_enumeration ? enumerate_rademacher(grid)
                                             : sample_paths(grid, s.d, s.l, s.M, s.seed, s.law);
    return std::make_shared<RegressionBackend>(paths, s.basis);
}

RunResult run_scenario(const Scenario& s, const std::string& suite) {
    RunResult r;
    r.scenario = s.name;
    r.seed = s.seed;
    r.backend = s.backend;
    r.law = s.backend == BackendKind::tree ? Law::rademacher : s.law;
    r.T = s.T;
    r.N = s.N;

    const Problem p = s.problem();
    const SharedBackend be = make_backend(s);
    r.M = be->nodes(0);
    const double dt = be->grid().dt;

    Solved main = solve_main(s, p, be);
    const Solution& sol = main.sol;
    r.warnings = sol.warnings;

    auto& out = r.outcomes;
    out["solver"] = sol.solver;
    out["Y0"] = sol.root();
    out["max_abs_Y"] = sol.max_abs_Y();
    const Estimate energy = z_energy(sol);
    out["z_energy"] = energy.value;
    out["z_energy_half_width"] = energy.half_width;
    if (sol.reflected()) out["K_T"] = sol.K_mean().back();
    if (main.pipeline) {
        out["cbar"] = main.pipeline->cbar;
        out["shift"] = main.pipeline->shift;
        out["exceedance"] = main.pipeline->exceedance;
    }

    std::optional<Envelope> upper, lower;

    for (const auto& c : s.checks) {
        if (suite != "all" && c.suite != suite) continue;
        CheckResult cr;
        cr.name = c.name;
        if (c.suite == "expect") {
            const std::string q = c.name.substr(7);
            const double expected = param_or(c, "", 0.0);
            double actual = 0.0;
            if (q == "Y0") actual = sol.root();
            else if (q == "z_energy") actual = energy.value;
            else {
                if (!sol.reflected()) throw InvalidArgument("expect.K_T needs a reflected solver");
                actual = sol.K_mean().back();
            }
            cr.value = std::abs(actual - expected);
            cr.tolerance = param_or(c, "tol", 1e-9);
            cr.pass = cr.value <= cr.tolerance;
            std::ostringstream os;
            os.precision(17);
            os << "actual " << actual << ", expected " << expected;
            cr.detail = os.str();
        } else if (c.suite == "comparison") {
            auto q = s.partner_problem();
            if (!q) throw InvalidArgument("comparison check needs partner.* coefficients");
            Solved other = solve_main(s, *q, be);
            const double tol = param_or(c, "tol", comparison_tolerance(other.sol));
            const ComparisonReport rep = compare_root(sol, other.sol, tol);
            out["partner_Y0"] = other.sol.root();
            out["comparison_nodewise_violations"] = rep.nodewise_violations;
            cr.value = rep.root_gap;
            cr.tolerance = rep.tolerance;
            cr.pass = rep.pass;
            cr.detail = "Y0 - partner Y0";
        } else if (c.suite == "skorokhod") {
            if (!p.S || !sol.reflected()) throw InvalidArgument("skorokhod check needs a reflected solver");
            cr.value = skorokhod_residual(sol, *p.S);
            cr.tolerance = param_or(c, "tol", 0.0);
            cr.pass = cr.value <= cr.tolerance;
        } else if (c.suite == "envelope") {
            const std::string kind = param_str(c, "", "uv");
            if (kind == "uv") {
                if (!p.xi_bound) throw InvalidArgument("uv envelope needs xi_bound");
                auto [U, V] = ode_pair_uv(p.C, *p.xi_bound, p.T);
                lower = U;
                upper = V;
            } else {
                const double xi_part = param_or(c, "xi_part", p.xi_bound.value_or(0.0));
                const TimeFunction a = time_fn(param_str(c, "a", "0"));
                const TimeFunction b = time_fn(param_str(c, "b", "0"));
                upper = linear_envelope(xi_part, a, b, p.C, p.alpha, p.lambda, p.T, EnvelopeKind::upper);
                lower = linear_envelope(xi_part, a, b, p.C, p.alpha, p.lambda, p.T, EnvelopeKind::lower);
            }
            cr.tolerance = param_or(c, "tol", 10.0 * dt);
            const EnvelopeReport ru = check_envelope(sol, *upper, cr.tolerance);
            const EnvelopeReport rl = check_envelope(sol, *lower, cr.tolerance);
            cr.value = std::max(ru.worst, rl.worst);
            cr.pass = cr.value <= cr.tolerance;
            out["envelope_upper_worst"] = ru.worst;
            out["envelope_lower_worst"] = rl.worst;
            cr.detail = kind;
        } else if (c.suite == "ladder") {
            const LadderMode mode = parse_ladder_mode(param_str(c, "", "sup-conv"));
            const auto schedule = parse_schedule(param_str(c, "schedule", "2,4,8,16"));
            cr.tolerance = param_or(c, "tol", 1e-8);
            const LadderResult lr = maximal_ladder(p, schedule, mode, be, s.solve, cr.tolerance);
            out["ladder_schedule"] = lr.report.schedule;
            out["ladder_roots"] = lr.report.roots;
            out["ladder_gaps"] = lr.report.gaps;
            cr.value = lr.report.worst_violation;
            cr.pass = lr.report.order_violations == 0 && lr.report.gaps_shrinking_tail;
            cr.detail = to_string(mode) + (lr.report.gaps_shrinking_tail ? "" : ", gaps not shrinking");
        } else if (c.suite == "contraction") {
            const int iters = static_cast<int>(param_or(c, "iterations", 6));
            std::optional<double> gamma;
            if (c.params.count("gamma") && c.params.at("gamma") != "auto") gamma = param_or(c, "gamma", 0.0);
            const PicardResult pr = picard_outer(p, be, iters, gamma);
            const ContractionStats st = picard_contraction_stats(pr.iterates, pr.gamma);
            out["picard_gamma"] = pr.gamma;
            out["picard_distances"] = st.distances;
            out["picard_ratios"] = st.ratios;
            out["picard_factor"] = st.fitted_factor;
            cr.value = st.fitted_factor;
            cr.tolerance = param_or(c, "max_factor", 0.8);
            cr.pass = st.converged || cr.value <= cr.tolerance;
        } else if (c.suite == "energy") {
            const double M = main.pipeline ? main.pipeline->cbar : sol.max_abs_Y();
            const double bound = z_energy_bound(p.C, p.alpha, M, param_or(c, "b_l1", 0.0));
            out["z_energy_bound"] = bound;
            cr.value = energy.value - bound;
            cr.tolerance = energy.half_width;
            cr.pass = cr.value <= cr.tolerance;
            cr.detail = "z_energy - bound";
        } else if (c.suite == "certificate") {
            if (!main.pipeline) throw InvalidArgument("certificate check needs the pipeline solver");
            cr.value = main.pipeline->exceedance;
            cr.tolerance = param_or(c, "tol", 10.0 * dt * main.pipeline->cbar);
            cr.pass = cr.value <= cr.tolerance;
        }
        r.checks.push_back(cr);
    }

    const auto K = sol.K_mean();
    for (std::size_t i = 0; i <= s.N; ++i) {
        TableRow row;
        row.step = i;
        row.t = sol.grid.t(i);
        const auto& Y = sol.Y[i];
        row.mean_Y = mean_of(Y);
        double var = 0.0, ymax = -1e300, ymin = 1e300;
        for (double y : Y) {
            var += (y - row.mean_Y) * (y - row.mean_Y);
            ymax = std::max(ymax, y);
            ymin = std::min(ymin, y);
        }
        row.sd_Y = Y.size() > 1 ? std::sqrt(var / static_cast<double>(Y.size() - 1)) : 0.0;
        const std::size_t n = Y.size();
        double za = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            double z2 = 0.0;
            for (int j = 0; j < sol.d; ++j) z2 += sol.Z[i][k * sol.d + j] * sol.Z[i][k * sol.d + j];
            za += std::sqrt(z2);
        }
        row.mean_absZ = n ? za / static_cast<double>(n) : 0.0;
        row.K_mean = sol.reflected() ? K[i] : 0.0;
        if (upper && lower) {
            row.envelope_upper = (*upper)(row.t);
            row.envelope_lower = (*lower)(row.t);
            row.margin = std::min(*row.envelope_upper - ymax, ymin - *row.envelope_lower);
        }
        r.table.push_back(row);
    }
    return r;
}

nlohmann::ordered_json results_json(const RunResult& r, bool with_timestamp) {
    nlohmann::ordered_json j;
    j["version"] = results_schema;
    j["scenario"] = r.scenario;
    j["seed"] = r.seed;
    j["backend"] = to_string(r.backend);
    j["grid"] = {{"T", r.T}, {"N", r.N}};
    j["sampling"] = {{"M", r.M}, {"law", to_string(r.law)}};
    j["outcomes"] = r.outcomes;
    j["checks"] = nlohmann::ordered_json::array();
    for (const auto& c : r.checks) {
        nlohmann::ordered_json e;
        e["name"] = c.name;
        e["value"] = c.value;
        e["tolerance"] = c.tolerance;
        e["verdict"] = c.pass ? "pass" : "fail";
        if (!c.detail.empty()) e["detail"] = c.detail;
        j["checks"].push_back(e);
    }
    j["warnings"] = r.warnings;
    if (with_timestamp) {
        const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        j["timestamp"] = buf;
    }
    return j;
}

std::string tables_csv(const RunResult& r) {
    std::string s = "step,t,mean_Y,sd_Y,mean_absZ,K_mean,envelope_upper,envelope_lower,margin\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        s += buf;
    };
    auto opt = [&](const std::optional<double>& v) {
        if (v) num(*v);
    };
    for (const auto& row : r.table) {
        s += std::to_string(row.step);
        s += ',';
        num(row.t);
        s += ',';
        num(row.mean_Y);
        s += ',';
        num(row.sd_Y);
        s += ',';
        num(row.mean_absZ);
        s += ',';
        num(row.K_mean);
        s += ',';
        opt(row.envelope_upper);
        s += ',';
        opt(row.envelope_lower);
        s += ',';
        opt(row.margin);
        s += '\n';
    }
    return s;
}

std::string summary_text(const RunResult& r) {
    std::ostringstream os;
    os.precision(10);
    os << "scenario " << r.scenario << "  backend " << to_string(r.backend) << "  N=" << r.N << "  M=" << r.M
       << "  seed=" << r.seed << "\n";
    for (const auto& [k, v] : r.outcomes.items())
        if (v.is_number() || v.is_string()) os << "  " << k << " = " << v.dump() << "\n";
    if (!r.checks.empty()) os << "checks:\n";
    for (const auto& c : r.checks) {
        os << "  " << (c.pass ? "PASS " : "FAIL ") << c.name << "  value=" << c.value << "  tol=" << c.tolerance;
        if (!c.detail.empty()) os << "  (" << c.detail << ")";
        os << "\n";
    }
    for (const auto& w : r.warnings) os << "warning: " << w << "\n";
    return os.str();
}

void emit_report(const RunResult& r, const std::string& dir, const std::vector<std::string>& formats) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
    auto write = [&](const std::string& name, const std::string& body) {
        const auto path = std::filesystem::path(dir) / name;
        std::ofstream f(path, std::ios::binary);
        if (!f) throw IoError("cannot write " + path.string());
        f << body;
        if (!f) throw IoError("write failed for " + path.string());
    };
    for (const auto& fmt : formats) {
        if (fmt == "json") write("results.json", results_json(r).dump(2) + "\n");
        else if (fmt == "csv") write("tables.csv", tables_csv(r));
        else if (fmt == "summary") write("summary.txt", summary_text(r));
        else throw InvalidArgument("unknown output format '" + fmt + "'");
    }
}

}  // namespace bdsde
