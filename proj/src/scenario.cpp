#include "bdsde/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "bdsde/error.hpp"
#include "bdsde/oracles.hpp"

namespace bdsde {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

[[noreturn]] void bad(const Entry& e, const std::string& msg) { throw ParseError(msg, e.line, e.column); }

double to_double(const Entry& e) {
    double v = 0.0;
    const std::string& s = e.value;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v)) bad(e, "expected a number, got '" + s + "'");
    return v;
}

long long to_int(const Entry& e) {
    long long v = 0;
    const std::string& s = e.value;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) bad(e, "expected an integer, got '" + s + "'");
    return v;
}

std::uint32_t mask_of(std::initializer_list<int> slots) {
    std::uint32_t m = 0;
    for (int s : slots) m |= 1U << s;
    return m;
}

std::uint32_t z_mask(int d) {
    std::uint32_t m = 0;
    for (int k = 0; k < d; ++k) m |= 1U << (slot::z1 + k);
    return m;
}

std::uint32_t w_mask(int d) {
    std::uint32_t m = 0;
    for (int k = 0; k < d; ++k) m |= 1U << (slot::w1 + k);
    return m;
}

Expr expr_field(const Entry& e, std::uint32_t allowed, const std::string& field) {
    Expr x = parse_expr(e.value, e.line, e.column);
    const std::uint32_t extra = x.variables() & ~allowed;
    if (extra) {
        for (int s = 0; s < slot::count; ++s)
            if (extra & (1U << s)) bad(e, "variable '" + slot_name(s) + "' is not available in " + field);
    }
    return x;
}

const std::set<std::string> check_groups = {"expect", "comparison", "skorokhod", "envelope",
                                            "ladder", "contraction", "energy", "certificate"};

const std::map<std::string, std::set<std::string>> check_params = {
    {"comparison", {"", "tol"}},
    {"skorokhod", {"", "tol"}},
    {"envelope", {"", "tol", "a", "b", "xi_part"}},
    {"ladder", {"", "schedule", "tol"}},
    {"contraction", {"", "iterations", "max_factor", "gamma"}},
    {"energy", {"", "b_l1"}},
    {"certificate", {"", "tol"}},
};

}  // namespace

Problem make_problem(const Scenario& s, const ProblemExprs& e) {
    Problem p;
    p.d = s.d;
    p.l = s.l;
    p.T = s.T;
    p.C = s.C;
    p.alpha = s.alpha;
    p.mu = s.mu;
    p.xi_bound = s.xi_bound;
    const int d = s.d;
    p.xi = [x = e.xi, d](const NodeState& st) {
        EvalContext c;
        c.set(slot::t, st.t).set(slot::btail, st.btail);
        for (int k = 0; k < d; ++k) c.set(slot::w1 + k, st.w[k]);
        return eval_expr(x, c);
    };
    p.f = [x = e.f, d](double t, double y, std::span<const double> z) {
        EvalContext c;
        c.set(slot::t, t).set(slot::y, y);
        for (int k = 0; k < d; ++k) c.set(slot::z1 + k, z[k]);
        return eval_expr(x, c);
    };
    if (!e.g.empty()) {
        p.g = [g = e.g, d](double t, double y, std::span<const double> z, std::span<double> out) {
            EvalContext c;
            c.set(slot::t, t).set(slot::y, y);
            for (int k = 0; k < d; ++k) c.set(slot::z1 + k, z[k]);
            for (std::size_t j = 0; j < g.size(); ++j) out[j] = eval_expr(g[j], c);
        };
    }
    if (!e.S.empty()) {
        p.S = [x = e.S, d](const NodeState& st) {
            EvalContext c;
            c.set(slot::t, st.t).set(slot::btail, st.btail).set(slot::db, st.db);
            for (int k = 0; k < d; ++k) c.set(slot::w1 + k, st.w[k]);
            return eval_expr(x, c);
        };
    }
    if (!s.lambda.empty())
        p.lambda = [x = s.lambda](double t) { return eval_expr(x, EvalContext{}.set(slot::t, t)); };
    if (!s.phi.empty()) p.phi = [x = s.phi](double u) { return eval_expr(x, EvalContext{}.set(slot::y, u)); };
    p.phi0 = s.phi0;
    return p;
}

Problem Scenario::problem() const { return make_problem(*this, exprs); }

std::optional<Problem> Scenario::partner_problem() const {
    if (!partner) return std::nullopt;
    return make_problem(*this, *partner);
}

Scenario parse_scenario(const std::string& text, const std::string& origin) {
    Scenario s;
    s.source = origin;
    static const std::set<std::string> known_sections = {"problem", "numerics", "checks", "outputs"};

    std::istringstream in(text);
    std::string raw;
    int line = 0;
    std::string current;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string body = hash == std::string::npos ? raw : raw.substr(0, hash);
        const std::string t = trim(body);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ParseError("unterminated section header", line, 1);
            current = trim(t.substr(1, t.size() - 2));
            if (!known_sections.count(current)) throw ParseError("unknown section [" + current + "]", line, 1);
            s.sections[current];
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", line, 1);
        if (current.empty()) throw ParseError("entry outside of a section", line, 1);
        const std::string key = trim(body.substr(0, eq));
        const std::string rest = body.substr(eq + 1);
        const auto vstart = rest.find_first_not_of(" \t");
        const std::string value = trim(rest);
        if (key.empty()) throw ParseError("missing key", line, 1);
        if (value.empty()) throw ParseError("missing value for '" + key + "'", line, static_cast<int>(eq) + 2);
        auto& sec = s.sections[current];
        if (sec.count(key)) throw ParseError("duplicate key '" + key + "'", line, 1);
        sec[key] = Entry{value, line, static_cast<int>(eq + 1 + (vstart == std::string::npos ? 0 : vstart)) + 1};
    }

    auto& prob = s.sections["problem"];
    auto& num = s.sections["numerics"];
    auto& chk = s.sections["checks"];
    auto& outs = s.sections["outputs"];

    auto need = [&](Section& sec, const std::string& key, const std::string& secname) -> const Entry& {
        auto it = sec.find(key);
        if (it == sec.end()) throw ParseError("missing required key '" + key + "' in [" + secname + "]", line, 1);
        return it->second;
    };

    // [problem]
    std::set<std::string> used;
    auto take = [&](const std::string& key) -> const Entry* {
        auto it = prob.find(key);
        if (it == prob.end()) return nullptr;
        used.insert(key);
        return &it->second;
    };
    if (auto e = take("name")) s.name = e->value;
    if (auto e = take("d")) s.d = static_cast<int>(to_int(*e));
    if (auto e = take("l")) s.l = static_cast<int>(to_int(*e));
    if (s.d < 1 || s.d > 9) throw ParseError("d must lie in 1..9", prob.count("d") ? prob["d"].line : 1, 1);
    if (s.l < 1 || s.l > 9) throw ParseError("l must lie in 1..9", prob.count("l") ? prob["l"].line : 1, 1);
    if (auto e = take("T")) {
        s.T = to_double(*e);
        if (!(s.T > 0.0)) bad(*e, "T must be positive");
    }
    const std::uint32_t gen = mask_of({slot::t, slot::y}) | z_mask(s.d);
    const std::uint32_t term = mask_of({slot::t, slot::btail}) | w_mask(s.d);
    const std::uint32_t obst = mask_of({slot::t, slot::btail, slot::db}) | w_mask(s.d);
    const std::uint32_t tonly = mask_of({slot::t});

    auto read_exprs = [&](const std::string& prefix, ProblemExprs* base) {
        ProblemExprs e = base ? *base : ProblemExprs{};
        bool any = false;
        if (auto x = take(prefix + "xi")) { e.xi = expr_field(*x, term, "xi"); any = true; }
        if (auto x = take(prefix + "f")) { e.f = expr_field(*x, gen, "f"); any = true; }
        if (auto x = take(prefix + "S")) { e.S = expr_field(*x, obst, "S"); any = true; }
        std::vector<Expr> g(s.l);
        bool has_g = false;
        for (int j = 0; j < s.l; ++j) {
            const Entry* x = take(prefix + "g" + std::to_string(j + 1));
            if (!x && j == 0) x = take(prefix + "g");
            if (x) {
                g[j] = expr_field(*x, gen, "g");
                has_g = true;
            }
        }
        if (has_g) {
            for (int j = 0; j < s.l; ++j)
                if (g[j].empty()) g[j] = parse_expr("0");
            e.g = g;
            any = true;
        }
        return std::make_pair(e, any);
    };
    auto [mainx, any_main] = read_exprs("", nullptr);
    (void)any_main;
    if (mainx.xi.empty()) need(prob, "xi", "problem");
    if (mainx.f.empty()) need(prob, "f", "problem");
    s.exprs = mainx;
    auto [px, any_partner] = read_exprs("partner.", &s.exprs);
    if (any_partner) s.partner = px;

    if (auto e = take("C")) s.C = to_double(*e);
    if (auto e = take("alpha")) {
        s.alpha = to_double(*e);
        if (!(s.alpha > 0.0 && s.alpha < 1.0)) bad(*e, "alpha must lie in (0,1)");
    }
    if (s.C < 0.0) bad(prob["C"], "C must be non-negative");
    if (auto e = take("mu")) s.mu = to_double(*e);
    if (auto e = take("lambda")) s.lambda = expr_field(*e, tonly, "lambda");
    if (auto e = take("phi")) {
        s.phi = expr_field(*e, mask_of({slot::y}), "phi");
        s.phi0 = eval_expr(s.phi, EvalContext{}.set(slot::y, 0.0));
    }
    if (auto e = take("phi0")) s.phi0 = to_double(*e);
    if (auto e = take("xi_bound")) s.xi_bound = to_double(*e);
    if (auto e = take("profile")) {
        for (const auto& tag : split_list(e->value)) {
            AssumptionProfile pr;
            try {
                pr.tag = parse_profile_tag(tag);
            } catch (const InvalidArgument& ex) {
                bad(*e, ex.what());
            }
            s.profiles.push_back(pr);
        }
    }
    for (auto& [key, entry] : prob) {
        if (used.count(key)) continue;
        if (key.rfind("profile.", 0) == 0) {
            const auto dot = key.find('.', 8);
            if (dot == std::string::npos) bad(entry, "profile parameters are written profile.<TAG>.<name>");
            const std::string tag = key.substr(8, dot - 8), pname = key.substr(dot + 1);
            auto it = std::find_if(s.profiles.begin(), s.profiles.end(),
                                   [&](const AssumptionProfile& p) { return to_string(p.tag) == tag; });
            if (it == s.profiles.end()) bad(entry, "parameter for undeclared profile '" + tag + "'");
            double v = 0.0;
            const auto r = std::from_chars(entry.value.data(), entry.value.data() + entry.value.size(), v);
            if (r.ec == std::errc() && r.ptr == entry.value.data() + entry.value.size()) {
                it->constants[pname] = v;
            } else {
                Expr x = expr_field(entry, tonly, key);
                it->functions[pname] = [x](double t) { return eval_expr(x, EvalContext{}.set(slot::t, t)); };
            }
            continue;
        }
        bad(entry, "unknown key '" + key + "' in [problem]");
    }

    // [numerics]
    static const std::set<std::string> num_keys = {"backend", "N", "M", "law", "seed", "scheme", "inner_iterations",
                                                   "basis.degree", "basis.features", "basis.ridge", "solver",
                                                   "penalty", "penalty_form", "paths"};
    for (auto& [key, entry] : num)
        if (!num_keys.count(key)) bad(entry, "unknown key '" + key + "' in [numerics]");
    auto wrap = [](const Entry& e, auto&& fn) {
        try {
            return fn();
        } catch (const InvalidArgument& ex) {
            bad(e, ex.what());
        }
    };
    if (num.count("backend")) s.backend = wrap(num["backend"], [&] { return parse_backend(num["backend"].value); });
    if (num.count("N")) {
        const auto v = to_int(num["N"]);
        if (v < 1) bad(num["N"], "N must be at least 1");
        s.N = static_cast<std::size_t>(v);
    }
    if (num.count("M")) {
        const auto v = to_int(num["M"]);
        if (v < 1) bad(num["M"], "M must be at least 1");
        s.M = static_cast<std::size_t>(v);
    }
    s.law = s.backend == BackendKind::tree ? Law::rademacher : Law::gaussian;
    if (num.count("law")) s.law = wrap(num["law"], [&] { return parse_law(num["law"].value); });
    if (num.count("seed")) s.seed = static_cast<std::uint64_t>(to_int(num["seed"]));
    if (num.count("scheme")) {
        const std::string v = num["scheme"].value;
        if (v == "explicit") s.solve.scheme = Scheme::explicit_step;
        else if (v == "inner-picard") s.solve.scheme = Scheme::inner_picard;
        else if (v == "implicit") s.solve.scheme = Scheme::implicit_step;
        else bad(num["scheme"], "scheme must be explicit, inner-picard or implicit");
    }
    if (num.count("inner_iterations")) s.solve.inner_iterations = static_cast<int>(to_int(num["inner_iterations"]));
    if (num.count("basis.degree")) s.basis.degree = static_cast<int>(to_int(num["basis.degree"]));
    if (num.count("basis.features")) {
        s.basis.use_w = s.basis.use_btail = s.basis.use_db = false;
        for (const auto& f : split_list(num["basis.features"].value)) {
            if (f == "w") s.basis.use_w = true;
            else if (f == "btail") s.basis.use_btail = true;
            else if (f == "db") s.basis.use_db = true;
            else bad(num["basis.features"], "unknown basis feature '" + f + "'");
        }
    }
    if (num.count("basis.ridge") && num["basis.ridge"].value != "auto") s.basis.ridge = to_double(num["basis.ridge"]);
    if (num.count("solver")) {
        s.solver = num["solver"].value;
        static const std::set<std::string> solvers = {"backward", "projection", "penalized", "pipeline"};
        if (!solvers.count(s.solver)) bad(num["solver"], "solver must be backward, projection, penalized or pipeline");
    }
    if (num.count("penalty")) s.penalty = to_double(num["penalty"]);
    if (num.count("penalty_form")) {
        const std::string v = num["penalty_form"].value;
        if (v == "positive-part") s.penalty_form = PenaltyForm::positive_part;
        else if (v == "linear") s.penalty_form = PenaltyForm::linear;
        else bad(num["penalty_form"], "penalty_form must be positive-part or linear");
    }
    if (num.count("paths")) {
        const std::string v = num["paths"].value;
        if (v == "enumerated") s.shared_enumeration = true;
        else if (v != "sampled") bad(num["paths"], "paths must be sampled or enumerated");
    }

    // [checks]
    std::map<std::string, CheckSpec> groups;
    for (auto& [key, entry] : chk) {
        const auto dot = key.find('.');
        const std::string group = key.substr(0, dot);
        if (!check_groups.count(group)) bad(entry, "unknown check '" + key + "'");
        if (group == "expect") {
            if (dot == std::string::npos) bad(entry, "expected values are written expect.<quantity>");
            std::string rest = key.substr(dot + 1);
            std::string param;
            if (rest.size() > 4 && rest.substr(rest.size() - 4) == ".tol") {
                param = "tol";
                rest = rest.substr(0, rest.size() - 4);
            }
            static const std::set<std::string> quantities = {"Y0", "z_energy", "K_T"};
            if (!quantities.count(rest)) bad(entry, "unknown expected quantity '" + rest + "'");
            auto& spec = groups["expect." + rest];
            spec.name = "expect." + rest;
            spec.suite = "expect";
            (void)to_double(entry);
            spec.params[param] = entry.value;
            continue;
        }
        const std::string param = dot == std::string::npos ? "" : key.substr(dot + 1);
        if (!check_params.at(group).count(param)) bad(entry, "unknown parameter '" + key + "'");
        auto& spec = groups[group];
        spec.name = group;
        spec.suite = group;
        spec.params[param] = entry.value;
        if (group == "envelope" && (param == "a" || param == "b")) (void)expr_field(entry, tonly, key);
        if (group == "ladder" && param.empty()) wrap(entry, [&] { return parse_ladder_mode(entry.value); });
        if (group == "envelope" && param.empty() && entry.value != "uv" && entry.value != "linear")
            bad(entry, "envelope must be uv or linear");
    }
    for (auto& [k, spec] : groups) {
        if (spec.suite == "expect" && !spec.params.count("")) throw ParseError("tolerance given without a value for " + k, 1, 1);
        s.checks.push_back(spec);
    }

    // [outputs]
    for (auto& [key, entry] : outs) {
        if (key == "dir") s.out_dir = entry.value;
        else if (key == "formats") {
            s.formats = split_list(entry.value);
            for (const auto& f : s.formats)
                if (f != "json" && f != "csv" && f != "summary") bad(entry, "unknown output format '" + f + "'");
        } else bad(entry, "unknown key '" + key + "' in [outputs]");
    }
    if (s.name.empty()) s.name = "scenario";
    if (s.out_dir.empty()) s.out_dir = "results/" + s.name;

    // Cross-field invariants.
    if (s.backend == BackendKind::tree) {
        if (s.d != 1 || s.l != 1) throw ParseError("tree backend needs d = l = 1", prob.count("d") ? prob["d"].line : 1, 1);
        if (s.N > 20) throw ParseError("tree backend is capped at N = 20", num.count("N") ? num["N"].line : 1, 1);
        if (s.law != Law::rademacher) throw ParseError("tree backend needs the rademacher law", num.count("law") ? num["law"].line : 1, 1);
    }
    if (s.shared_enumeration && (s.d != 1 || s.l != 1 || s.N > 12))
        throw ParseError("enumerated paths need d = l = 1 and N <= 12", num["paths"].line, 1);
    if ((s.solver == "projection" || s.solver == "penalized") && s.exprs.S.empty())
        throw ParseError("solver '" + s.solver + "' needs an obstacle S", num["solver"].line, 1);
    if (s.solver == "pipeline" && !s.xi_bound)
        throw ParseError("pipeline solver needs xi_bound", num["solver"].line, 1);

    // S_T <= xi on 100 sampled terminal states.
    if (!s.exprs.S.empty()) {
        const Problem p = s.problem();
        const auto paths = sample_paths(make_grid(s.T, 1), s.d, s.l, 100, s.seed, Law::gaussian);
        std::vector<double> w(s.d);
        for (std::size_t m = 0; m < 100; ++m) {
            for (int k = 0; k < s.d; ++k) w[k] = paths->dW(0, m, k);
            const NodeState st{s.T, w, 0.0, 0.0};
            if ((*p.S)(st) > p.xi(st) + 1e-12)
                throw ParseError("obstacle exceeds the terminal value at T", prob.at("S").line, prob.at("S").column);
        }
    }
    return s;
}

Scenario load_scenario(const std::string& path) {
    if (path.rfind("builtin:", 0) == 0) {
        const std::string name = path.substr(8);
        const auto* o = find_oracle(name);
        if (!o) throw IoError("no built-in scenario named '" + name + "'");
        return parse_scenario(o->text, path);
    }
    std::ifstream in(path);
    if (!in) throw IoError("cannot read scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path);
}

}  // namespace bdsde
