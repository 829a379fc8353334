#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "qnd/analysis.hpp"
#include "qnd/config.hpp"
#include "qnd/sme.hpp"

namespace qnd {

// Exit code contract shared by the CLI and the experiment drivers.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitVerdictFail = 2;
inline constexpr int kExitDiverged = 3;

struct ExperimentResult {
    EnsembleStats stats;
    std::optional<LyapunovSpec> bound;
    std::optional<BoundVerdict> verdict;
    double v0 = 0.0;
    double plateau_mean_z = 0.0;  // mean of mean_z over the last fifth of the run
    std::filesystem::path output_dir;
};

// Everything derived from a config before running: operators, monitor, bound.
struct ExperimentSetup {
    Matrix L;
    Matrix rho0;
    Controller controller;
    RunOptions options;
    std::optional<LyapunovSpec> bound;
    bool verdict_applies = false;  // bounds are checked on the nominal model only
};

ExperimentSetup prepare_experiment(const ExperimentConfig& cfg);

// Runs the ensemble and writes ensemble.csv, verdict.json and optionally
// trajectories.csv / figure.svg into cfg.output_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream& log);

// Wraps run_experiment with the exit-code contract (verdict failures only
// count under cfg.strict).
int run_experiment_cli(const ExperimentConfig& cfg, std::ostream& log);

// One run per parameter value in its own subdirectory plus sweep_summary.csv
// (value, terminal mean V, fitted decay rate over the first 2/r time units).
int run_sweep(const ExperimentConfig& cfg, const std::string& parameter,
              const std::vector<double>& values, std::ostream& log);

// Cross-checks the closed-form generators against the finite-difference
// appendix form (n_points random states each) and against Monte Carlo
// estimates on the full SME; prints a report.
int run_generator_checks(int n_points, std::ostream& log);

// Least-squares slope of log(mean V) over t in (0, horizon]; NaN when fewer
// than two usable samples.
double fit_decay_rate(const std::vector<double>& times, const std::vector<double>& mean_v,
                      double horizon);

}  // namespace qnd
