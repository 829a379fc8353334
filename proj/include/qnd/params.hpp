#pragma once

#include <cstdint>
#include <stdexcept>

namespace qnd {

// Thrown when a state leaves the density-matrix set beyond projection
// tolerance; the usual fix is a smaller time step.
class IntegratorDivergedError : public std::runtime_error {
  public:
    explicit IntegratorDivergedError(const std::string& what) : std::runtime_error(what) {}
};

enum class StepperKind { OpenLoop, ClosedExpanded, ClosedPropagator };

// Simulation parameters. Time is measured in units of 1/gamma with gamma = 1
// by default; eta is the detection efficiency; gamma_dec an optional
// unmonitored qubit decay channel.
struct SimParams {
    double dt = 1e-4;
    double t_final = 1.0;
    double eta = 1.0;
    double gamma = 1.0;
    double gamma_dec = 0.0;
    std::uint64_t seed = 0;
    int n_traj = 1;
    int record_stride = 100;
    int n_threads = 0;  // 0 = use hardware concurrency

    void validate() const {
        if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
        if (!(t_final >= dt)) throw std::invalid_argument("t_final must be at least dt");
        if (!(eta > 0 && eta <= 1)) throw std::invalid_argument("eta must lie in (0, 1]");
        if (!(gamma > 0)) throw std::invalid_argument("gamma must be positive");
        if (!(gamma_dec >= 0)) throw std::invalid_argument("gamma_dec must be non-negative");
        if (n_traj < 1) throw std::invalid_argument("n_traj must be at least 1");
        if (record_stride < 1) throw std::invalid_argument("record_stride must be at least 1");
    }
};

}  // namespace qnd
