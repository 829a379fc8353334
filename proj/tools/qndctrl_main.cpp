#include <CLI11.hpp>
#include <iostream>
#include <sstream>

#include "qnd/config.hpp"
#include "qnd/experiment.hpp"

namespace {

std::vector<double> parse_values(const std::string& csv) {
    std::vector<double> values;
    std::istringstream in(csv);
    std::string cell;
    while (std::getline(in, cell, ',')) {
        if (cell.empty()) continue;
        values.push_back(std::stod(cell));
    }
    return values;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diffusive QND measurement simulator and feedback controller testbench"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string param;
    std::string values_csv;
    std::uint64_t seed = 0;
    bool strict = false, svg = false;
    int points = 1000;

    CLI::App* simulate = app.add_subcommand("simulate", "run one ensemble experiment");
    simulate->add_option("--config", config_path, "JSON experiment config")->required();
    simulate->add_flag("--strict", strict, "exit 2 when a bound verdict fails");
    simulate->add_option("--seed", seed, "override the RNG seed");
    simulate->add_option("--out", out_dir, "override the output directory");
    simulate->add_flag("--svg", svg, "emit figure.svg");

    CLI::App* sweep = app.add_subcommand("sweep", "run one experiment per parameter value");
    sweep->add_option("--config", config_path, "JSON experiment config")->required();
    sweep->add_option("--param", param, "eta | gamma_dec | dt | n_traj | theta_bar")->required();
    sweep->add_option("--values", values_csv, "comma-separated values")->required();
    sweep->add_option("--out", out_dir, "override the output directory");

    CLI::App* checker =
        app.add_subcommand("check-generator", "cross-validate the Lyapunov generators");
    checker->add_option("--points", points, "random states per check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? qnd::kExitOk : qnd::kExitConfigError;
    }

    try {
        if (checker->parsed()) return qnd::run_generator_checks(points, std::cout);

        qnd::ExperimentConfig cfg = qnd::ExperimentConfig::from_json_file(config_path);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (simulate->parsed()) {
            if (simulate->count("--seed") > 0) cfg.params.seed = seed;
            cfg.strict = cfg.strict || strict;
            cfg.emit_svg = cfg.emit_svg || svg;
            return qnd::run_experiment_cli(cfg, std::cout);
        }
        return qnd::run_sweep(cfg, param, parse_values(values_csv), std::cout);
    } catch (const qnd::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return qnd::kExitConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return qnd::kExitConfigError;
    } catch (const qnd::IntegratorDivergedError& e) {
        std::cerr << "integrator diverged: " << e.what() << "\n";
        return qnd::kExitDiverged;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return qnd::kExitConfigError;
    }
}
