#include "qnd/config.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace qnd {

namespace {

using nlohmann::json;

double get_number(const json& node, const std::string& where) {
    if (!node.is_number()) throw ConfigError("field '" + where + "' must be a number");
    return node.get<double>();
}

void apply_params(const json& j, SimParams& p) {
    for (const auto& [key, value] : j.items()) {
        if (key == "dt")
            p.dt = get_number(value, "params.dt");
        else if (key == "t_final")
            p.t_final = get_number(value, "params.t_final");
        else if (key == "eta")
            p.eta = get_number(value, "params.eta");
        else if (key == "gamma")
            p.gamma = get_number(value, "params.gamma");
        else if (key == "gamma_dec")
            p.gamma_dec = get_number(value, "params.gamma_dec");
        else if (key == "seed")
            p.seed = value.is_number_unsigned() || value.is_number_integer()
                         ? value.get<std::uint64_t>()
                         : static_cast<std::uint64_t>(get_number(value, "params.seed"));
        else if (key == "n_traj")
            p.n_traj = static_cast<int>(get_number(value, "params.n_traj"));
        else if (key == "record_stride")
            p.record_stride = static_cast<int>(get_number(value, "params.record_stride"));
        else if (key == "n_threads")
            p.n_threads = static_cast<int>(get_number(value, "params.n_threads"));
        else
            throw ConfigError("unknown field 'params." + key + "'");
    }
}

Controller parse_controller(const json& j, double eta) {
    if (!j.is_object()) throw ConfigError("field 'controller' must be an object");
    const std::string type = j.value("type", "");
    try {
        if (type == "null") return Controller::null_control();
        if (type == "static_output")
            return Controller::static_output(get_number(j.at("theta_bar"), "controller.theta_bar"),
                                             j.contains("alpha_bar")
                                                 ? get_number(j.at("alpha_bar"),
                                                              "controller.alpha_bar")
                                                 : 0.0);
        if (type == "adaptive_qnd") {
            const std::string target = j.value("target", "excited");
            if (target == "excited") return Controller::adaptive_qnd(ControlTarget::Excited);
            if (target == "ground") return Controller::adaptive_qnd(ControlTarget::Ground);
            throw ConfigError("controller.target must be 'excited' or 'ground'");
        }
        if (type == "smooth_state")
            return Controller::smooth_state(get_number(j.at("alpha"), "controller.alpha"),
                                            get_number(j.at("beta"), "controller.beta"), eta);
    } catch (const json::out_of_range& e) {
        throw ConfigError(std::string("controller: missing field (") + e.what() + ")");
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("controller: ") + e.what());
    }
    throw ConfigError("controller.type must be one of null, static_output, adaptive_qnd, "
                      "smooth_state; got '" +
                      type + "'");
}

Matrix parse_initial_state(const json& j, int dim) {
    if (j.is_string()) {
        const std::string name = j.get<std::string>();
        if (name == "maximally_mixed") return identity(dim) / static_cast<double>(dim);
        if (name == "excited") return excited_projector();
        if (name == "ground") return ground_projector();
        throw ConfigError("initial_state must be maximally_mixed, excited, ground or "
                          "{\"bloch\": [x,y,z]}; got '" +
                          name + "'");
    }
    if (j.is_object() && j.contains("bloch")) {
        const auto& b = j.at("bloch");
        if (!b.is_array() || b.size() != 3)
            throw ConfigError("initial_state.bloch must be an array [x, y, z]");
        try {
            return from_bloch(get_number(b[0], "initial_state.bloch[0]"),
                              get_number(b[1], "initial_state.bloch[1]"),
                              get_number(b[2], "initial_state.bloch[2]"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("initial_state: ") + e.what());
        }
    }
    throw ConfigError("initial_state must be a name or {\"bloch\": [x,y,z]}");
}

Scenario parse_scenario(const std::string& name) {
    if (name == "fig1") return Scenario::Fig1;
    if (name == "fig2") return Scenario::Fig2;
    if (name == "openloop") return Scenario::OpenLoop;
    if (name == "lemma3") return Scenario::Lemma3;
    if (name == "custom") return Scenario::Custom;
    throw ConfigError("scenario must be one of fig1, fig2, openloop, lemma3, custom; got '" +
                      name + "'");
}

void apply_scenario_defaults(ExperimentConfig& cfg) {
    SimParams& p = cfg.params;
    switch (cfg.scenario) {
        case Scenario::Fig1:
            p.eta = 0.5;
            p.gamma = 1.0;
            p.dt = 1e-4;
            p.t_final = 40.0 / (p.eta * p.gamma);
            p.n_traj = 100;
            p.seed = 42;
            cfg.controller = Controller::adaptive_qnd(ControlTarget::Excited);
            break;
        case Scenario::Fig2:
            p.eta = 0.5;
            p.gamma = 1.0;
            p.gamma_dec = 0.1;
            p.dt = 1e-4;
            p.t_final = 100.0 / p.gamma;
            p.n_traj = 100;
            p.seed = 42;
            cfg.controller = Controller::adaptive_qnd(ControlTarget::Excited);
            break;
        case Scenario::OpenLoop:
            p.eta = 1.0;
            p.gamma = 1.0;
            p.dt = 1e-4;
            // rate (eta/2) min-gap^2 = eta gamma for the qubit operator
            p.t_final = 50.0 / (p.eta * p.gamma);
            p.n_traj = 200;
            p.seed = 42;
            cfg.controller = Controller::null_control();
            break;
        case Scenario::Lemma3:
            p.eta = 1.0;
            p.gamma = 1.0;
            p.dt = 1e-4;
            p.n_traj = 1000;
            p.seed = 42;
            p.t_final = 2.5;  // 5 / r at theta_bar = pi/2
            cfg.controller = Controller::static_output(M_PI / 2.0, 0.0);
            break;
        case Scenario::Custom:
            break;
    }
    cfg.initial_state = 0.5 * identity(2);
}

ExperimentConfig from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    ExperimentConfig cfg;
    cfg.scenario = parse_scenario(j.value("scenario", "custom"));
    apply_scenario_defaults(cfg);

    if (j.contains("params")) {
        if (!j.at("params").is_object()) throw ConfigError("field 'params' must be an object");
        apply_params(j.at("params"), cfg.params);
    }
    if (j.contains("controller")) cfg.controller = parse_controller(j.at("controller"),
                                                                    cfg.params.eta);
    if (j.contains("lambdas")) {
        const auto& arr = j.at("lambdas");
        if (!arr.is_array() || arr.size() < 2)
            throw ConfigError("field 'lambdas' must be an array of at least 2 eigenvalues");
        cfg.lambdas.resize(static_cast<int>(arr.size()));
        for (size_t i = 0; i < arr.size(); ++i)
            cfg.lambdas[static_cast<int>(i)] = get_number(arr[i], "lambdas[]");
        if (!cfg.controller.is_null())
            throw ConfigError("custom 'lambdas' require the null controller (open loop)");
    }

    const int dim = cfg.lambdas.size() > 0 ? static_cast<int>(cfg.lambdas.size()) : 2;
    if (j.contains("initial_state"))
        cfg.initial_state = parse_initial_state(j.at("initial_state"), dim);
    else if (dim != 2)
        cfg.initial_state = identity(dim) / static_cast<double>(dim);
    if (cfg.initial_state.rows() != dim)
        throw ConfigError("initial_state dimension does not match lambdas");

    if (j.contains("stepper")) {
        const std::string s = j.at("stepper").get<std::string>();
        if (s == "expanded")
            cfg.stepper = StepperKind::ClosedExpanded;
        else if (s == "propagator")
            cfg.stepper = StepperKind::ClosedPropagator;
        else
            throw ConfigError("stepper must be 'expanded' or 'propagator'; got '" + s + "'");
    }
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.emit_svg = j.value("emit_svg", cfg.emit_svg);
    cfg.record_trajectories = j.value("record_trajectories", cfg.record_trajectories);

    for (const auto& [key, value] : j.items()) {
        (void)value;
        static const char* known[] = {"scenario",  "params",   "controller",
                                      "lambdas",   "initial_state", "stepper",
                                      "output_dir", "emit_svg", "record_trajectories"};
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError("unknown top-level field '" + key + "'");
    }

    try {
        cfg.params.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("params: ") + e.what());
    }
    return cfg;
}

}  // namespace

const char* scenario_name(Scenario s) {
    switch (s) {
        case Scenario::Fig1: return "fig1";
        case Scenario::Fig2: return "fig2";
        case Scenario::OpenLoop: return "openloop";
        case Scenario::Lemma3: return "lemma3";
        case Scenario::Custom: return "custom";
    }
    return "unknown";
}

Matrix ExperimentConfig::measurement_operator() const {
    if (lambdas.size() > 0) {
        Matrix L = Matrix::Zero(lambdas.size(), lambdas.size());
        L.diagonal() = lambdas.cast<Complex>();
        return L;
    }
    return std::sqrt(0.5 * params.gamma) * pauli_z();
}

ExperimentConfig ExperimentConfig::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return from_json_text(buffer.str());
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    try {
        return from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    }
}

}  // namespace qnd
