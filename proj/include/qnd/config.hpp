#pragma once

#include <filesystem>
#include <string>

#include "qnd/control.hpp"
#include "qnd/params.hpp"
#include "qnd/qop.hpp"

namespace qnd {

class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class Scenario { Fig1, Fig2, OpenLoop, Lemma3, Custom };

const char* scenario_name(Scenario s);

// Experiment description: a scenario preset plus explicit overrides from the
// JSON config and command-line flags.
struct ExperimentConfig {
    Scenario scenario = Scenario::Custom;
    SimParams params;
    Controller controller;
    Matrix initial_state;       // density matrix
    Eigen::VectorXd lambdas;    // measurement eigenvalues (L = diag, open loop n > 2)
    StepperKind stepper = StepperKind::ClosedExpanded;
    std::string output_dir = "out";
    bool emit_svg = false;
    bool record_trajectories = false;
    bool strict = false;

    // Measurement operator implied by the config: diag(lambdas) when lambdas
    // are given, sqrt(gamma/2) sigma_z otherwise.
    Matrix measurement_operator() const;

    static ExperimentConfig from_json_file(const std::filesystem::path& path);
    static ExperimentConfig from_json_text(const std::string& text);
};

}  // namespace qnd
