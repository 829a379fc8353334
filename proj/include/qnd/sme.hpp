#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "qnd/control.hpp"
#include "qnd/params.hpp"
#include "qnd/qop.hpp"

namespace qnd {

// One Euler-Maruyama update. dy is the measurement-record increment computed
// from the pre-step state; rho is the projected post-step state.
struct StepResult {
    Matrix rho;
    double dy = 0.0;
};

// Open loop: d rho = D(L, rho) dt + sqrt(eta) M(L, rho) dW.
StepResult step_open_loop(const Matrix& rho, const Matrix& L, const SimParams& params, double dW);

// Closed loop, expanded form:
// d rho = -i f [F, rho] dt - (i kappa sqrt(eta)/2) [FL + LF, rho] dt
//         + D(L - i kappa sqrt(eta) F, rho) dt + D(i kappa sqrt(1-eta) F, rho) dt
//         + sqrt(eta) M(L, rho) dW - i kappa [F, rho] dW
// The caller evaluates (f, kappa) from the pre-step state (Ito convention).
StepResult step_closed_expanded(const Matrix& rho, const Matrix& L, const Matrix& F, double f,
                                double kappa, const SimParams& params, double dW);

// Closed loop, propagator form: the open-loop increment
// X = rho + D dt + sqrt(eta) M dW is conjugated by exp(-i F u dt) expanded to
// second order, with u dt = f dt + kappa dY built from the simulated record.
// Products of two Wiener increments are contracted to dt (Ito table); the
// realized dt*dW cross terms are kept, so a step differs from the expanded
// form at O(dt^{3/2}).
StepResult step_closed_propagator(const Matrix& rho, const Matrix& L, const Matrix& F, double f,
                                  double kappa, const SimParams& params, double dW);

// drift + (gamma_dec / 2) D(|g><e|, rho); the unmonitored decay channel of the
// decoherence study. Qubit only.
Matrix add_decoherence(const Matrix& drift, const Matrix& rho, double gamma_dec);

// Re-hermitize, clip negative eigenvalues, renormalize the trace. clipped
// accumulates the total clipped negative mass, min_eig reports the smallest
// pre-clip eigenvalue (exact for n = 2; for larger n it is only refined when
// the cheap positivity check fails). Throws IntegratorDivergedError below
// -0.05.
Matrix project_state(Matrix rho, double* clipped = nullptr, double* min_eig = nullptr);

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<BlochVector> bloch;           // filled for n = 2
    std::vector<Eigen::VectorXd> fidelities;  // tr(rho rho_bar_l) per sample
    std::vector<double> lyapunov;             // monitor values (NaN without monitor)
    std::vector<double> y_record;             // cumulative measurement signal
    Matrix terminal_state;
    double clipped_total = 0.0;   // positivity mass removed by projection
    double worst_min_eig = 0.0;   // see RunOptions::track_min_eig
};

using LyapunovFn = std::function<double(const Matrix&)>;

struct RunOptions {
    StepperKind stepper = StepperKind::ClosedExpanded;
    LyapunovFn lyapunov;                       // optional monitor
    std::vector<Matrix> projectors;            // record fidelities against these
    bool track_min_eig = false;                // exact min eigenvalue every step
    bool antithetic = false;                   // negate the Wiener stream
};

// Integrates one trajectory from t = 0 to t_final. Wiener increments come
// from the counter-based stream (params.seed, trajectory_index), so results
// are bit-identical for a given index no matter how many trajectories run or
// on which thread.
TrajectoryRecord run_trajectory(const Matrix& rho0, const Matrix& L, const Controller& controller,
                                const SimParams& params, std::uint64_t trajectory_index,
                                const RunOptions& options = {});

struct ScalarStats {
    std::vector<double> mean;
    std::vector<double> sem;  // NaN when n_traj = 1
};

struct EnsembleStats {
    std::vector<double> times;
    ScalarStats V;
    ScalarStats x, y, z;                // n = 2 only
    std::vector<ScalarStats> fidelity;  // one per projector
    int n_traj = 0;
    std::vector<TrajectoryRecord> records;  // retained on request
};

// Runs params.n_traj independent trajectories (in parallel when
// params.n_threads != 1) and aggregates per-time mean and standard error.
// Aggregation order is fixed by trajectory index, so the output does not
// depend on the degree of parallelism.
EnsembleStats run_ensemble(const Matrix& rho0, const Matrix& L, const Controller& controller,
                           const SimParams& params, const RunOptions& options = {},
                           bool keep_records = false);

}  // namespace qnd
