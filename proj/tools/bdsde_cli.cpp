#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "bdsde/error.hpp"
#include "bdsde/oracles.hpp"
#include "bdsde/parallel.hpp"
#include "bdsde/runner.hpp"

using namespace bdsde;

namespace {

struct Common {
    std::string file;
    std::optional<std::size_t> paths, steps;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> backend, out;
    int threads = 1;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("scenario", c.file, "scenario file, or builtin:<name>")->required();
    app->add_option("--paths", c.paths, "number of Monte Carlo paths M");
    app->add_option("--steps", c.steps, "number of time steps N");
    app->add_option("--seed", c.seed, "noise seed");
    app->add_option("--backend", c.backend, "mc or tree")->check(CLI::IsMember({"mc", "tree"}));
    app->add_option("--out", c.out, "output directory");
    app->add_option("--threads", c.threads, "worker threads")->check(CLI::Range(1, 256));
}

Scenario load(const Common& c) {
    Scenario s = load_scenario(c.file);
    RunOverrides o;
    o.paths = c.paths;
    o.steps = c.steps;
    o.seed = c.seed;
    if (c.backend) o.backend = parse_backend(*c.backend);
    o.out_dir = c.out;
    apply_overrides(s, o);
    set_thread_count(c.threads);
    return s;
}

int run(const Common& c, const std::string& suite) {
    const Scenario s = load(c);
    const RunResult r = run_scenario(s, suite);
    emit_report(r, s.out_dir, s.formats);
    std::cout << summary_text(r);
    return r.all_pass() ? exit_ok : exit_check_failed;
}

int check_profile(const Common& c) {
    const Scenario s = load(c);
    if (s.profiles.empty()) {
        std::cout << "no profiles declared\n";
        return exit_ok;
    }
    const Problem p = s.problem();
    std::size_t bad = 0;
    for (const auto& pr : s.profiles) {
        const ProfileReport rep = profile_check(p, pr, 2000, s.seed);
        for (const auto& iq : rep.inequalities) {
            std::printf("%-4s %-32s worst_margin=%.6g violations=%zu/%zu\n", to_string(rep.tag).c_str(),
                        iq.name.c_str(), iq.worst_margin, iq.violations, iq.samples);
        }
        bad += rep.total_violations();
    }
    return bad ? exit_check_failed : exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical lab for backward doubly stochastic differential equations"};
    app.require_subcommand(1);

    Common run_opts, verify_opts, profile_opts;
    std::string suite = "all";
    std::string show_name;

    auto* run_cmd = app.add_subcommand("run", "solve a scenario and write results");
    add_common(run_cmd, run_opts);

    auto* verify_cmd = app.add_subcommand("verify", "run one suite of checks from a scenario");
    add_common(verify_cmd, verify_opts);
    verify_cmd->add_option("--suite", suite, "expect, comparison, skorokhod, envelope, ladder, contraction, energy, certificate or all")
        ->check(CLI::IsMember({"all", "expect", "comparison", "skorokhod", "envelope", "ladder", "contraction", "energy",
                               "certificate"}));

    auto* profile_cmd = app.add_subcommand("check-profile", "sample the declared assumption profiles");
    add_common(profile_cmd, profile_opts);

    auto* oracle_cmd = app.add_subcommand("oracle", "built-in oracle scenarios");
    oracle_cmd->require_subcommand(1);
    auto* list_cmd = oracle_cmd->add_subcommand("list", "list built-in scenarios");
    auto* show_cmd = oracle_cmd->add_subcommand("show", "print a built-in scenario");
    show_cmd->add_option("name", show_name)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*run_cmd) return run(run_opts, "all");
        if (*verify_cmd) return run(verify_opts, suite);
        if (*profile_cmd) return check_profile(profile_opts);
        if (*list_cmd) {
            for (const auto& o : oracles()) std::cout << o.name << "  " << o.description << "\n";
            return exit_ok;
        }
        if (*show_cmd) {
            const Oracle* o = find_oracle(show_name);
            if (!o) {
                std::cerr << "error: no built-in scenario named '" << show_name << "'\n";
                return exit_usage;
            }
            std::cout << o->text;
            return exit_ok;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numerical;
    }
    return exit_usage;
}
