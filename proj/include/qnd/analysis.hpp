#pragma once

#include <functional>
#include <vector>

#include "qnd/control.hpp"
#include "qnd/qop.hpp"
#include "qnd/sme.hpp"

namespace qnd {

enum class LyapKind { OpenLoopQnd, StaticOutputTarget, AdaptiveQnd };
enum class BoundKind { Inequality, Equality };

// A Lyapunov function together with its certified decay rate.
//
// OpenLoopQnd:        V = sum_{l<l'} sqrt(q_l q_l'),  r = (eta/2) min gap^2
// StaticOutputTarget: V = 1 - tr(rho rho_bar),        r = 2 gamma sin^2(theta)
// AdaptiveQnd:        V = sqrt(1 -+ z),               r = eta gamma / 4
//
// The static-output rate constant is twice the value quoted alongside the
// gain formulas in the source material; the closed-loop mean ODE (and the
// equality monitor below) single out 2 gamma sin^2(theta) unambiguously.
struct LyapunovSpec {
    LyapKind kind = LyapKind::AdaptiveQnd;
    BoundKind bound = BoundKind::Inequality;
    double rate = 0.0;
    double eta = 1.0;
    double gamma = 1.0;
    QndSpectrum spectrum;                         // OpenLoopQnd
    Matrix target;                                // StaticOutputTarget
    ControlTarget goal = ControlTarget::Excited;  // AdaptiveQnd

    static LyapunovSpec open_loop_qnd(const QndSpectrum& spectrum, double eta);
    static LyapunovSpec static_output_target(double theta_bar, double alpha_bar, double eta,
                                             double gamma);
    static LyapunovSpec adaptive(ControlTarget goal, double eta, double gamma);

    LyapunovFn as_fn() const;
};

double lyapunov_value(const LyapunovSpec& spec, const Matrix& rho);

// ---------------------------------------------------------------------------
// Reduced coordinates.

// Lemma-1 chart: xi_l = sqrt(tr(rho rho_bar_l)), non-negative, sum xi^2 = 1.
// Theorem-1 chart: (x, y, xi) with xi = sqrt(1 - z).
enum class ReducedKind { Lemma1Xi, Theorem1XYXi };

struct ReducedTrajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
};

// Closed-form Markov generators applied to the respective Lyapunov functions.
double generator_openloop_xi(const Eigen::VectorXd& xi, const Eigen::VectorXd& lambdas,
                             double eta);
double generator_adaptive_xyxi(double x, double y, double xi, double eta, double gamma);

// Drift and diffusion fields of the reduced SDEs (single Wiener channel).
// Shared by simulate_reduced and the finite-difference generator oracle.
void openloop_xi_coeffs(const Eigen::VectorXd& xi, const Eigen::VectorXd& lambdas, double eta,
                        Eigen::VectorXd& mu, Eigen::VectorXd& sigma);
void adaptive_xyxi_coeffs(const Eigen::VectorXd& s, double eta, double gamma, Eigen::VectorXd& mu,
                          Eigen::VectorXd& sigma);

// Generic generator A V = mu . grad V + 1/2 sigma sigma^T : hess V evaluated
// by central finite differences of V along the coordinate axes.
using ScalarField = std::function<double(const Eigen::VectorXd&)>;
using CoeffField =
    std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::VectorXd&)>;
double generator_finite_difference(const ScalarField& V, const CoeffField& coeffs,
                                   const Eigen::VectorXd& x, double h = 1e-4);

// Euler-Maruyama on the reduced SDE with the (seed, index) stream contract of
// run_trajectory; lambdas is used by the Lemma1Xi kind only.
ReducedTrajectory simulate_reduced(ReducedKind kind, const Eigen::VectorXd& initial,
                                   const Eigen::VectorXd& lambdas, const SimParams& params,
                                   std::uint64_t trajectory_index);

// ---------------------------------------------------------------------------
// Monte Carlo generator estimate on the full SME:
// (E[V(rho_{t+delta})] - V(rho)) / delta with delta = delta_steps * dt.
// Antithetic noise pairs cancel the O(sqrt(delta)) sampling term.
struct GeneratorEstimate {
    double value = 0.0;
    double sem = 0.0;
    int n_samples = 0;

    bool contains(double target, double n_sigma = 2.0) const {
        return std::abs(value - target) <= n_sigma * sem;
    }
};

GeneratorEstimate mc_generator_estimate(const Matrix& rho, const Matrix& L,
                                        const Controller& controller, const LyapunovFn& V,
                                        const SimParams& params, int delta_steps, int n_samples,
                                        StepperKind stepper = StepperKind::ClosedExpanded);

// ---------------------------------------------------------------------------
// Exponential-bound verdicts.

struct BoundVerdict {
    bool pass = false;
    double worst_margin = 0.0;  // max over t of (violation - tolerance); <= 0 passes
    double worst_time = 0.0;
    double rate = 0.0;
    double v0 = 0.0;
};

// Inequality: mean(t) <= e^{-rt} V0 (1 + 0.02) + 3 SEM(t) at every sample.
// Equality:  |mean(t) - e^{-rt} V0| <= 3 SEM(t) + 0.02 e^{-rt} V0.
BoundVerdict check_exponential_bound(const std::vector<double>& times, const ScalarStats& v_stats,
                                     const LyapunovSpec& spec, double v0);

// Khasminskii p-stability check with p = 1 on the (x, y, xi) chart:
// mean ||(x,y,xi)_t|| <= sqrt(3) ||(x,y,xi)_0|| e^{-rt} (1 + 0.05) + 3 SEM.
struct PStabilityVerdict {
    bool pass = false;
    double fitted_c = 0.0;  // empirical sup of mean ||x_t|| e^{rt} / ||x_0||
    double worst_margin = 0.0;
};

PStabilityVerdict check_p_stability(const std::vector<TrajectoryRecord>& records, double eta,
                                    double gamma);

}  // namespace qnd
