#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bdsde/scenario.hpp"
#include "json.hpp"

namespace bdsde {

inline constexpr const char* results_schema = "bdsde-results/1";

// Command-line values that override the scenario file.
struct RunOverrides {
    std::optional<std::size_t> paths;
    std::optional<std::size_t> steps;
    std::optional<std::uint64_t> seed;
    std::optional<BackendKind> backend;
    std::optional<std::string> out_dir;
};

void apply_overrides(Scenario& s, const RunOverrides& o);

struct CheckResult {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = true;
    std::string detail;
};

// One row of tables.csv. Envelope columns are blank when no envelope was checked.
struct TableRow {
    std::size_t step = 0;
    double t = 0.0;
    double mean_Y = 0.0;
    double sd_Y = 0.0;
    double mean_absZ = 0.0;
    double K_mean = 0.0;
    std::optional<double> envelope_upper;
    std::optional<double> envelope_lower;
    std::optional<double> margin;
};

struct RunResult {
    std::string scenario;
    std::uint64_t seed = 0;
    BackendKind backend = BackendKind::tree;
    Law law = Law::rademacher;
    double T = 0.0;
    std::size_t N = 0;
    std::size_t M = 0;  // paths, or leaves of the tree
    nlohmann::ordered_json outcomes = nlohmann::ordered_json::object();
    std::vector<CheckResult> checks;
    std::vector<TableRow> table;
    std::vector<std::string> warnings;

    bool all_pass() const;
};

SharedBackend make_backend(const Scenario& s);

// Solves and runs the checks whose suite matches (`all` runs every check).
// Numerical failures propagate as exceptions.
RunResult run_scenario(const Scenario& s, const std::string& suite = "all");

nlohmann::ordered_json results_json(const RunResult& r, bool with_timestamp = true);
std::string tables_csv(const RunResult& r);
std::string summary_text(const RunResult& r);

// Writes the requested formats into `dir`, creating it. IoError on failure.
void emit_report(const RunResult& r, const std::string& dir, const std::vector<std::string>& formats);

}  // namespace bdsde
