#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bdsde/error.hpp"
#include "bdsde/oracles.hpp"
#include "bdsde/runner.hpp"

using namespace bdsde;
namespace fs = std::filesystem;

namespace {

std::string scenarios_dir() {
    const char* d = std::getenv("BDSDE_SCENARIOS");
    return d ? d : BDSDE_DEFAULT_SCENARIOS;
}

std::string cli_path() {
    const char* c = std::getenv("BDSDE_CLI");
    return c ? c : BDSDE_DEFAULT_CLI;
}

std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

const char* minimal = R"([problem]
name = tiny
T = 1
xi = w1
f = 0

[numerics]
backend = tree
N = 4
)";

int run_cli(const std::string& args) {
    const int st = std::system((cli_path() + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string drop_timestamp(const std::string& json) {
    std::istringstream in(json);
    std::string line, out;
    while (std::getline(in, line))
        if (line.find("\"timestamp\"") == std::string::npos) out += line + "\n";
    return out;
}

}  // namespace

TEST(Scenario, BuiltinMatchesFile) {
    for (const Oracle& o : oracles()) {
        const fs::path p = fs::path(scenarios_dir()) / (o.name + ".scn");
        ASSERT_TRUE(fs::exists(p)) << p;
        EXPECT_EQ(read(p), o.text) << o.name;
        EXPECT_EQ(load_scenario("builtin:" + o.name).name, o.name);
    }
    EXPECT_THROW(load_scenario("builtin:nope"), Error);
}

TEST(Scenario, EveryFixtureParses) {
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(scenarios_dir())) {
        if (e.path().extension() != ".scn" || e.path().stem() == "neg_alpha") continue;
        const Scenario s = load_scenario(e.path().string());
        EXPECT_FALSE(s.name.empty());
        // expressions print back to themselves
        for (const Expr* x : {&s.exprs.xi, &s.exprs.f, &s.exprs.S})
            if (!x->empty()) EXPECT_EQ(parse_expr(to_string(*x)), *x) << e.path();
        ++n;
    }
    EXPECT_GT(n, 15u);
}

TEST(Scenario, Minimal) {
    const Scenario s = parse_scenario(minimal, "mem");
    EXPECT_EQ(s.name, "tiny");
    EXPECT_EQ(s.N, 4u);
    EXPECT_EQ(s.law, Law::rademacher);
    EXPECT_EQ(s.out_dir, "results/tiny");
    EXPECT_TRUE(s.checks.empty());
}

TEST(Scenario, ValidationErrors) {
    const std::string base = minimal;
    // alpha outside (0,1)
    std::string a = base;
    a.insert(a.find("f = 0"), "alpha = 1.5\n");
    EXPECT_THROW(parse_scenario(a, "mem"), Error);
    // tree needs d = 1
    std::string d = base;
    d.insert(d.find("f = 0"), "d = 2\n");
    EXPECT_THROW(parse_scenario(d, "mem"), Error);
    // unknown key, reported with its line
    std::string u = base;
    u.insert(u.find("f = 0"), "colour = red\n");
    try {
        parse_scenario(u, "mem");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 5);
    }
    // duplicate key
    std::string dup = base + "N = 5\n";
    EXPECT_THROW(parse_scenario(dup, "mem"), ParseError);
    // z in a terminal value
    std::string z = base;
    z.replace(z.find("xi = w1"), 7, "xi = z1");
    EXPECT_THROW(parse_scenario(z, "mem"), Error);
    // obstacle above the terminal value
    std::string s = base + "";
    s.insert(s.find("f = 0"), "S = w1 + 1\n");
    EXPECT_THROW(parse_scenario(s, "mem"), Error);
}

TEST(Scenario, TreeStepCap) {
    std::string big = minimal;
    big.replace(big.find("N = 4"), 5, "N = 21");
    EXPECT_THROW(parse_scenario(big, "mem"), Error);
}

TEST(Runner, OraclesPass) {
    for (const Oracle& o : oracles()) {
        const RunResult r = run_scenario(load_scenario("builtin:" + o.name));
        EXPECT_TRUE(r.all_pass()) << o.name;
        EXPECT_FALSE(r.checks.empty());
    }
}

TEST(Runner, NoChecksNoVerdicts) {
    const RunResult r = run_scenario(parse_scenario(minimal, "mem"));
    EXPECT_TRUE(r.checks.empty());
    EXPECT_TRUE(results_json(r)["checks"].empty());
    EXPECT_EQ(r.M, 16u);
    EXPECT_NEAR(r.outcomes["Y0"].get<double>(), 0.0, 1e-15);
}

TEST(Runner, CsvHasOneRowPerStep) {
    const RunResult r = run_scenario(parse_scenario(minimal, "mem"));
    const std::string csv = tables_csv(r);
    std::size_t lines = 0;
    for (char c : csv) lines += c == '\n';
    EXPECT_EQ(lines, 1u + 5u);
}

TEST(Runner, JsonShape) {
    const auto j = results_json(run_scenario(load_scenario("builtin:oracle_wT")));
    EXPECT_EQ(j["version"], results_schema);
    EXPECT_EQ(j["grid"]["N"], 8);
    EXPECT_EQ(j["sampling"]["law"], "rademacher");
    EXPECT_TRUE(j.contains("timestamp"));
    for (const auto& c : j["checks"]) EXPECT_EQ(c["verdict"], "pass");
    EXPECT_FALSE(results_json(run_scenario(load_scenario("builtin:oracle_wT")), false).contains("timestamp"));
}

TEST(Runner, Deterministic) {
    const Scenario s = load_scenario((fs::path(scenarios_dir()) / "mc_lipschitz.scn").string());
    Scenario small = s;
    apply_overrides(small, RunOverrides{.paths = 2000, .steps = 8});
    const RunResult a = run_scenario(small), b = run_scenario(small);
    EXPECT_EQ(results_json(a, false).dump(), results_json(b, false).dump());
    EXPECT_EQ(tables_csv(a), tables_csv(b));
    Scenario other = small;
    apply_overrides(other, RunOverrides{.seed = 99});
    EXPECT_NE(run_scenario(other).outcomes["Y0"], a.outcomes["Y0"]);
}

TEST(Runner, OverridesRecheckTreeRules) {
    Scenario s = parse_scenario(minimal, "mem");
    EXPECT_THROW(apply_overrides(s, RunOverrides{.steps = 25}), Error);
}

TEST(Runner, EmitToUnwritableDir) {
    const RunResult r = run_scenario(parse_scenario(minimal, "mem"));
    EXPECT_THROW(emit_report(r, "/proc/forbidden/out", {"json"}), IoError);
}

TEST(Cli, ExitCodes) {
    const fs::path tmp = fs::temp_directory_path() / "bdsde_cli_test";
    fs::remove_all(tmp);
    const std::string dir = scenarios_dir() + "/";
    EXPECT_EQ(run_cli("run " + dir + "oracle_wT.scn --out " + tmp.string()), 0);
    EXPECT_TRUE(fs::exists(tmp / "results.json"));
    EXPECT_TRUE(fs::exists(tmp / "tables.csv"));
    const std::string first = drop_timestamp(read(tmp / "results.json"));
    EXPECT_EQ(run_cli("run " + dir + "oracle_wT.scn --out " + tmp.string()), 0);
    EXPECT_EQ(drop_timestamp(read(tmp / "results.json")), first);
    EXPECT_EQ(run_cli("run " + dir + "neg_alpha.scn --out " + tmp.string()), 2);
    EXPECT_EQ(run_cli("run " + dir + "neg_certificate.scn --out " + tmp.string()), 3);
    EXPECT_EQ(run_cli("run " + dir + "missing.scn"), 1);
    EXPECT_EQ(run_cli("frobnicate"), 1);
    EXPECT_EQ(run_cli("oracle list"), 0);
    EXPECT_EQ(run_cli("oracle show oracle_decay"), 0);
    EXPECT_EQ(run_cli("verify " + dir + "oracle_btail.scn --suite all --out " + tmp.string()), 0);
    fs::remove_all(tmp);
}
