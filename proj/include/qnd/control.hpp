#pragma once

#include "qnd/params.hpp"
#include "qnd/qop.hpp"

namespace qnd {

// The feedback signal is u dt = f dt + kappa dY: every controller reduces to
// the pair of coefficients (f, kappa) evaluated at the pre-step state, plus a
// fixed actuation Hamiltonian F.
enum class ControlTarget { Excited, Ground };

struct Controller {
    enum class Kind { Null, StaticOutput, AdaptiveQnd, SmoothState };

    Kind kind = Kind::Null;
    // StaticOutput: Bloch target angle theta_bar in (0, pi), azimuth alpha_bar.
    double theta_bar = 0.0;
    double alpha_bar = 0.0;
    // AdaptiveQnd: which sigma_z eigenstate to pin.
    ControlTarget target = ControlTarget::Excited;
    // SmoothState: state-feedback weights.
    double alpha = 0.0;
    double beta = 0.0;

    static Controller null_control();
    static Controller static_output(double theta_bar, double alpha_bar);
    static Controller adaptive_qnd(ControlTarget target);
    // The attraction-set condition beta^2 / (8 alpha eta) < 1 is checked here,
    // which is why construction needs the detection efficiency.
    static Controller smooth_state(double alpha, double beta, double eta);

    bool is_null() const { return kind == Kind::Null; }
    const char* name() const;
};

struct ControlOutput {
    double f = 0.0;
    double kappa = 0.0;
    Matrix actuator;  // F
};

struct Gains {
    double f = 0.0;
    double kappa = 0.0;
};

// Gain formulas as functions of the qubit coordinates (x, z). Kept separate
// from evaluate() so the trajectory engine can call them without forming a
// dynamic matrix each step.
Gains control_gains(const Controller& c, double x, double z, double eta, double gamma);

// Actuation Hamiltonian: sigma_y rotated by alpha_bar about z for
// StaticOutput, plain sigma_y otherwise (zero for the null controller).
Matrix control_actuator(const Controller& c);

ControlOutput evaluate(const Controller& c, const Matrix& rho, const SimParams& params);

// The pure state the controller is designed to stabilize.
Matrix target_state(const Controller& c);

// True iff [F, rho_bar_ell] vanishes, i.e. constant-gain output feedback
// through this F cannot move the fidelity tr(rho rho_bar_ell).
bool lemma2_invariance_witness(const Matrix& F, int ell, const Matrix& L);

}  // namespace qnd
