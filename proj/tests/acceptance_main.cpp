// Acceptance suite: one pass/fail line per criterion, exit 0 iff all pass.
//
// Every tolerance is pinned in code; nothing is calibrated at run time. The
// suite exercises the library exactly the way the experiment CLI does.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "qnd/analysis.hpp"
#include "qnd/control.hpp"
#include "qnd/experiment.hpp"
#include "qnd/qop.hpp"
#include "qnd/rng.hpp"
#include "qnd/sme.hpp"

using namespace qnd;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

Matrix measurement_op(double gamma) { return std::sqrt(0.5 * gamma) * pauli_z(); }

// Non-degenerate 3-level measurement operator with a deterministic
// non-trivial eigenbasis.
Matrix rotated_three_level(const Eigen::VectorXd& lambdas) {
    Matrix seed(3, 3);
    NormalStream rng(7777, 0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) seed(i, j) = Complex(rng.next(), rng.next());
    const Matrix q = Eigen::HouseholderQR<Matrix>(seed).householderQ();
    Matrix l = Matrix::Zero(3, 3);
    l.diagonal() = lambdas.cast<Complex>();
    l = (q * l * q.adjoint()).eval();
    return (0.5 * (l + l.adjoint())).eval();
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// 1. Theorem-1 bound, Fig. 1 protocol.

Outcome criterion1() {
    SimParams p;
    p.dt = 1e-4;
    p.t_final = 80.0;
    p.eta = 0.5;
    p.gamma = 1.0;
    p.seed = 42;
    p.n_traj = 100;
    p.record_stride = 100;

    const LyapunovSpec spec = LyapunovSpec::adaptive(ControlTarget::Excited, p.eta, p.gamma);
    RunOptions opts;
    opts.lyapunov = spec.as_fn();

    const auto t0 = std::chrono::steady_clock::now();
    const EnsembleStats stats = run_ensemble(0.5 * identity(2), measurement_op(p.gamma),
                                             Controller::adaptive_qnd(ControlTarget::Excited), p,
                                             opts);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const BoundVerdict v = check_exponential_bound(stats.times, stats.V, spec, 1.0);
    Outcome out;
    out.pass = v.pass && seconds < 60.0;
    out.detail = "rate 0.125, worst margin " + fmt(v.worst_margin) + " at t=" + fmt(v.worst_time) +
                 "; runtime " + fmt(seconds) + " s (< 60 s required)";
    return out;
}

// ---------------------------------------------------------------------------
// 2. Static-output exact decay for theta = pi/2 and pi/4.
//
// The equality certificate uses the decay rate implied by the closed-loop
// mean dynamics, r = 2 gamma sin^2(theta); see the analysis module.

Outcome criterion2() {
    Outcome out;
    std::ostringstream detail;
    for (double theta : {M_PI / 2.0, M_PI / 4.0}) {
        SimParams p;
        p.dt = 1e-4;
        p.eta = 1.0;
        p.gamma = 1.0;
        p.seed = 42;
        p.n_traj = 1000;
        p.record_stride = 100;

        const LyapunovSpec spec = LyapunovSpec::static_output_target(theta, 0.0, p.eta, p.gamma);
        p.t_final = 5.0 / spec.rate;
        RunOptions opts;
        opts.lyapunov = spec.as_fn();

        const EnsembleStats stats =
            run_ensemble(0.5 * identity(2), measurement_op(p.gamma),
                         Controller::static_output(theta, 0.0), p, opts);
        const double v0 = lyapunov_value(spec, 0.5 * identity(2));
        const BoundVerdict v = check_exponential_bound(stats.times, stats.V, spec, v0);
        out.pass = out.pass && v.pass;
        detail << "theta=" << fmt(theta) << ": r=" << fmt(spec.rate) << ", worst |dev|-tol "
               << fmt(v.worst_margin) << (v.pass ? " ok; " : " FAIL; ");
    }
    out.detail = detail.str();
    return out;
}

// ---------------------------------------------------------------------------
// 3. Open-loop exponential selection, n = 2 and n = 3.

Outcome criterion3_case(const Matrix& L, const Matrix& rho0, double dt, int n_traj,
                        std::ostringstream& detail) {
    const QndSpectrum spec_l = qnd_spectrum(L);
    const int n = spec_l.dim();
    const double eta = 1.0;

    const LyapunovSpec spec = LyapunovSpec::open_loop_qnd(spec_l, eta);
    SimParams p;
    p.dt = dt;
    p.eta = eta;
    p.gamma = 1.0;
    p.seed = 271828;
    p.n_traj = n_traj;
    p.record_stride = 500;
    p.t_final = 50.0 / spec.rate;

    RunOptions opts;
    opts.lyapunov = spec.as_fn();
    opts.projectors = spec_l.projectors;
    const EnsembleStats stats =
        run_ensemble(rho0, L, Controller::null_control(), p, opts, true);

    Outcome out;
    const double v0 = lyapunov_value(spec, rho0);
    // Bound checked on the t <= 5/r window of the tolerance protocol; past
    // rt ~ 15 the analytic curve e^{-rt} V0 drops below the sqrt-of-eps floor
    // that any double-precision V can reach. The run itself continues to
    // t = 50/r for the pathwise selection checks below.
    std::vector<double> win_times;
    ScalarStats win_v;
    for (size_t i = 0; i < stats.times.size() && stats.times[i] <= 5.0 / spec.rate; ++i) {
        win_times.push_back(stats.times[i]);
        win_v.mean.push_back(stats.V.mean[i]);
        win_v.sem.push_back(stats.V.sem[i]);
    }
    const BoundVerdict v = check_exponential_bound(win_times, win_v, spec, v0);
    out.pass = v.pass;
    detail << "n=" << n << ": r=" << fmt(spec.rate) << ", bound margin " << fmt(v.worst_margin);

    // every trajectory parks within 1e-3 trace distance of an eigenprojector
    double worst_dist = 0.0;
    std::vector<int> counts(static_cast<size_t>(n), 0);
    for (const TrajectoryRecord& rec : stats.records) {
        double best = 2.0;
        int best_l = 0;
        for (int l = 0; l < n; ++l) {
            const double d =
                trace_distance(rec.terminal_state, spec_l.projectors[static_cast<size_t>(l)]);
            if (d < best) {
                best = d;
                best_l = l;
            }
        }
        worst_dist = std::max(worst_dist, best);
        ++counts[static_cast<size_t>(best_l)];
    }
    out.pass = out.pass && worst_dist <= 1e-3;
    detail << ", worst terminal distance " << fmt(worst_dist);

    // selection frequencies reproduce the martingale probabilities
    double worst_freq_dev = 0.0;
    bool freq_ok = true;
    for (int l = 0; l < n; ++l) {
        const double prob = fidelity(rho0, spec_l.projectors[static_cast<size_t>(l)]);
        const double freq = static_cast<double>(counts[static_cast<size_t>(l)]) / n_traj;
        const double sem = std::sqrt(prob * (1.0 - prob) / n_traj);
        worst_freq_dev = std::max(worst_freq_dev, std::abs(freq - prob) - 4.0 * sem);
        freq_ok = freq_ok && std::abs(freq - prob) <= 4.0 * sem;
    }
    out.pass = out.pass && freq_ok;
    detail << ", freq dev-4sem " << fmt(worst_freq_dev) << (out.pass ? " ok; " : " FAIL; ");
    return out;
}

Outcome criterion3() {
    Outcome out;
    std::ostringstream detail;
    const Outcome two =
        criterion3_case(measurement_op(1.0), 0.5 * identity(2), 1e-4, 160, detail);
    Eigen::VectorXd lambdas(3);
    lambdas << -1.0, 0.3, 1.0;
    const Outcome three =
        criterion3_case(rotated_three_level(lambdas), identity(3) / 3.0, 2.5e-4, 120, detail);
    out.pass = two.pass && three.pass;
    out.detail = detail.str();
    return out;
}

// ---------------------------------------------------------------------------
// 4. Lemma-2 obstruction: a measurement-commuting actuator cannot move the
// eigenprojector fidelities.
//
// Pathwise the fidelity is the open-loop martingale (O(1) excursions), so the
// invariance is checked (a) against the coupled open-loop path sharing the
// same noise and (b) on the ensemble mean, each with the 5 dt t_final slope
// allowance at dt and dt/2.

Outcome criterion4() {
    const Matrix L = measurement_op(1.0);
    const Matrix F = pauli_z();
    const QndSpectrum spec = qnd_spectrum(L);
    const double f = 0.3, kappa = 0.2;
    const double t_final = 2.0;

    Outcome out;
    std::ostringstream detail;

    for (int l = 0; l < 2; ++l) {
        out.pass = out.pass && lemma2_invariance_witness(F, l, L);
        out.pass = out.pass && !lemma2_invariance_witness(pauli_y(), l, L);
    }
    detail << "witness ok";

    NormalStream state_rng(5150, 0);
    const Matrix rho0 = [&] {
        Matrix a(2, 2);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) a(i, j) = Complex(state_rng.next(), state_rng.next());
        Matrix rho = a * a.adjoint();
        rho /= rho.trace().real();
        return rho;
    }();

    for (double dt : {1e-3, 5e-4}) {
        SimParams p;
        p.dt = dt;
        p.eta = 0.8;
        p.gamma = 1.0;
        const long n_steps = std::lround(t_final / dt);
        double worst = 0.0;
        for (std::uint64_t path = 0; path < 8; ++path) {
            NormalStream noise(999, path);
            Matrix closed = rho0, open = rho0;
            for (long k = 0; k < n_steps; ++k) {
                const double dW = noise.next() * std::sqrt(dt);
                closed = step_closed_expanded(closed, L, F, f, kappa, p, dW).rho;
                open = step_open_loop(open, L, p, dW).rho;
                for (const Matrix& proj : spec.projectors)
                    worst = std::max(worst,
                                     std::abs(fidelity(closed, proj) - fidelity(open, proj)));
            }
        }
        const double allowance = 5.0 * dt * t_final;
        out.pass = out.pass && worst <= allowance;
        detail << "; coupled dev(dt=" << fmt(dt) << ") " << fmt(worst) << " <= " << fmt(allowance);
    }

    // ensemble-mean invariance of the fidelities
    SimParams p;
    p.dt = 1e-3;
    p.eta = 0.8;
    p.gamma = 1.0;
    p.t_final = t_final;
    p.seed = 8899;
    p.n_traj = 400;
    p.record_stride = 50;
    RunOptions opts;
    opts.projectors = spec.projectors;
    // constant-gain feedback through F = sigma_z, driven by the record
    struct ConstGainLoop {
        Matrix L, F;
        double f, kappa;
    };
    // run via the per-step API to keep the constant gains explicit
    std::vector<std::vector<double>> q_paths(
        2, std::vector<double>(static_cast<size_t>(p.n_traj)));
    const long n_steps = std::lround(p.t_final / p.dt);
    for (int traj = 0; traj < p.n_traj; ++traj) {
        NormalStream noise(p.seed, static_cast<std::uint64_t>(traj));
        Matrix rho = rho0;
        for (long k = 0; k < n_steps; ++k)
            rho = step_closed_expanded(rho, L, F, f, kappa, p, noise.next() * std::sqrt(p.dt)).rho;
        for (int l = 0; l < 2; ++l)
            q_paths[static_cast<size_t>(l)][static_cast<size_t>(traj)] =
                fidelity(rho, spec.projectors[static_cast<size_t>(l)]);
    }
    for (int l = 0; l < 2; ++l) {
        double sum = 0.0, sumsq = 0.0;
        for (double q : q_paths[static_cast<size_t>(l)]) {
            sum += q;
            sumsq += q * q;
        }
        const double mean = sum / p.n_traj;
        const double sem = std::sqrt(
            std::max(0.0, (sumsq - p.n_traj * mean * mean) / (p.n_traj - 1.0)) / p.n_traj);
        const double q0 = fidelity(rho0, spec.projectors[static_cast<size_t>(l)]);
        const double dev = std::abs(mean - q0);
        const double allowance = 4.0 * sem + 5.0 * p.dt * p.t_final;
        out.pass = out.pass && dev <= allowance;
        if (l == 0) detail << "; mean dev " << fmt(dev) << " <= " << fmt(allowance);
    }
    out.detail = detail.str();
    return out;
}

// ---------------------------------------------------------------------------
// 5. Stepper equivalence: expanded vs propagator under shared noise.

Outcome criterion5() {
    const Matrix L = measurement_op(1.0);
    const double eta = 0.5;
    const double t_final = 1.0;
    const int n_paths = 32;

    struct Case {
        std::string name;
        Controller controller;
    };
    const std::vector<Case> cases = {
        {"static_output", Controller::static_output(M_PI / 3.0, 0.7)},
        {"adaptive_qnd", Controller::adaptive_qnd(ControlTarget::Excited)},
        {"smooth_state", Controller::smooth_state(1.0, 0.8, eta)},
    };

    Outcome out;
    std::ostringstream detail;

    // Null controller: both routes collapse to the open-loop step exactly.
    {
        SimParams p;
        p.dt = 1e-3;
        p.eta = eta;
        p.gamma = 1.0;
        NormalStream noise(31337, 0);
        Matrix a = 0.5 * identity(2), b = a;
        const Matrix F = pauli_y();
        double worst = 0.0;
        for (long k = 0; k < 1000; ++k) {
            const double dW = noise.next() * std::sqrt(p.dt);
            a = step_closed_expanded(a, L, F, 0.0, 0.0, p, dW).rho;
            b = step_closed_propagator(b, L, F, 0.0, 0.0, p, dW).rho;
            worst = std::max(worst, trace_distance(a, b));
        }
        out.pass = out.pass && worst <= 1e-12;
        detail << "null ident " << fmt(worst);
    }

    for (const Case& c : cases) {
        const Matrix F = control_actuator(c.controller);
        // refinement-coupled Brownian paths across the three resolutions
        const double fine_dt = 2.5e-4;
        const long n_fine = std::lround(t_final / fine_dt);

        std::vector<double> dist(3, 0.0);  // dt = 1e-3, 5e-4, 2.5e-4
        for (int path = 0; path < n_paths; ++path) {
            NormalStream noise(60000 + path, 17);
            std::vector<double> dw(static_cast<size_t>(n_fine));
            for (double& v : dw) v = noise.next() * std::sqrt(fine_dt);

            for (int level = 0; level < 3; ++level) {
                const long stride = 1L << (2 - level);  // 4, 2, 1
                SimParams p;
                p.dt = fine_dt * static_cast<double>(stride);
                p.eta = eta;
                p.gamma = 1.0;
                Matrix a = 0.5 * identity(2), b = a;
                for (long k = 0; k < n_fine; k += stride) {
                    double dW = 0.0;
                    for (long j = 0; j < stride; ++j) dW += dw[static_cast<size_t>(k + j)];
                    const BlochVector ba = to_bloch(a);
                    const Gains ga = control_gains(c.controller, ba.x, ba.z, p.eta, p.gamma);
                    a = step_closed_expanded(a, L, F, ga.f, ga.kappa, p, dW).rho;
                    const BlochVector bb = to_bloch(b);
                    const Gains gb = control_gains(c.controller, bb.x, bb.z, p.eta, p.gamma);
                    b = step_closed_propagator(b, L, F, gb.f, gb.kappa, p, dW).rho;
                }
                dist[static_cast<size_t>(level)] += trace_distance(a, b) / n_paths;
            }
        }
        const double c_fitted = dist[0] / 1e-3;
        const double ratio1 = dist[0] / dist[1];
        const double ratio2 = dist[1] / dist[2];
        const bool ok = ratio1 >= 1.8 && ratio2 >= 1.8;
        out.pass = out.pass && ok;
        detail << "; " << c.name << " C=" << fmt(c_fitted) << " ratios " << fmt(ratio1) << "/"
               << fmt(ratio2) << (ok ? "" : " FAIL");
    }
    out.detail = detail.str();
    return out;
}

// ---------------------------------------------------------------------------
// 6. Generator oracles: MC vs closed forms (20 states each) and closed forms
// vs the finite-difference appendix generator (1000 points).

Outcome criterion6() {
    Outcome out;
    std::ostringstream detail;
    NormalStream rng(515151, 0);

    // adaptive law on the full SME
    {
        SimParams p;
        p.dt = 1e-4;
        p.eta = 0.5;
        p.gamma = 1.0;
        const Matrix L = measurement_op(p.gamma);
        const Controller c = Controller::adaptive_qnd(ControlTarget::Excited);
        const LyapunovFn v =
            LyapunovSpec::adaptive(ControlTarget::Excited, p.eta, p.gamma).as_fn();
        int hits = 0;
        double worst_pull = 0.0;
        for (int i = 0; i < 20; ++i) {
            double x, y, z;
            for (;;) {
                x = -1.0 + 2.0 * rng.next_uniform();
                y = -1.0 + 2.0 * rng.next_uniform();
                z = -1.0 + 2.0 * rng.next_uniform();
                if (x * x + y * y + z * z <= 1.0 && z <= 0.95) break;
            }
            const double xi = std::sqrt(1.0 - z);
            const double target = generator_adaptive_xyxi(x, y, xi, p.eta, p.gamma);
            const GeneratorEstimate est =
                mc_generator_estimate(from_bloch(x, y, z), L, c, v, p, 10, 2500);
            const double pull = std::abs(est.value - target) / std::max(est.sem, 1e-12);
            worst_pull = std::max(worst_pull, pull);
            if (est.contains(target, 3.0)) ++hits;
        }
        out.pass = out.pass && hits == 20;
        detail << "adaptive MC 3-sigma hits " << hits << "/20 (worst pull " << fmt(worst_pull)
               << ")";
    }

    // open-loop pairwise-fidelity monitor, n = 2 and n = 3 diagonal mixtures
    {
        SimParams p;
        p.dt = 1e-4;
        p.eta = 0.5;
        p.gamma = 2.0;
        int hits = 0;
        double worst_pull = 0.0;
        for (int i = 0; i < 20; ++i) {
            const int n = (i % 2) ? 3 : 2;
            Matrix L;
            Eigen::VectorXd lambdas(n);
            if (n == 2) {
                lambdas << -1.0, 1.0;
                L = pauli_z();
            } else {
                lambdas << -1.0, 0.3, 1.0;
                L = Matrix::Zero(3, 3);
                L.diagonal() = lambdas.cast<Complex>();
            }
            const QndSpectrum sp = qnd_spectrum(L);
            Eigen::VectorXd xi(n);
            for (int k = 0; k < n; ++k) xi[k] = 0.2 + rng.next_uniform();
            xi /= xi.norm();
            Matrix rho = Matrix::Zero(n, n);
            for (int k = 0; k < n; ++k)
                rho += (xi[k] * xi[k]) * sp.projectors[static_cast<size_t>(k)];
            const LyapunovFn v = LyapunovSpec::open_loop_qnd(sp, p.eta).as_fn();
            const double target = generator_openloop_xi(xi, lambdas, p.eta);
            const GeneratorEstimate est =
                mc_generator_estimate(rho, L, Controller::null_control(), v, p, 10, 2500);
            const double pull = std::abs(est.value - target) / std::max(est.sem, 1e-12);
            worst_pull = std::max(worst_pull, pull);
            if (est.contains(target, 3.0)) ++hits;
        }
        out.pass = out.pass && hits == 20;
        detail << "; open-loop MC hits " << hits << "/20 (worst pull " << fmt(worst_pull) << ")";
    }

    // finite-difference agreement at 1000 points per chart
    {
        std::ostringstream sink;
        const int code = run_generator_checks(1000, sink);
        out.pass = out.pass && code == kExitOk;
        detail << "; FD cross-check " << (code == kExitOk ? "ok" : "FAIL");
    }
    out.detail = detail.str();
    return out;
}

// ---------------------------------------------------------------------------
// 7. Decoherence plateaus of the controlled qubit.

Outcome criterion7() {
    Outcome out;
    std::ostringstream detail;
    struct Bracket {
        double gamma_dec, lo, hi;
    };
    const std::vector<Bracket> brackets = {
        {0.0, 0.995, 1.0}, {0.01, 0.95, 1.0}, {0.1, 0.65, 0.85}};

    for (const Bracket& b : brackets) {
        SimParams p;
        p.dt = 1e-4;
        p.t_final = 100.0;
        p.eta = 0.5;
        p.gamma = 1.0;
        p.gamma_dec = b.gamma_dec;
        p.seed = 42;
        p.n_traj = 100;
        p.record_stride = 200;

        const EnsembleStats stats =
            run_ensemble(0.5 * identity(2), measurement_op(p.gamma),
                         Controller::adaptive_qnd(ControlTarget::Excited), p, RunOptions{});
        const size_t n = stats.z.mean.size();
        const size_t tail = n / 5;
        double plateau = 0.0;
        for (size_t i = n - tail; i < n; ++i) plateau += stats.z.mean[i];
        plateau /= static_cast<double>(tail);

        const bool ok = plateau >= b.lo && plateau <= b.hi;
        out.pass = out.pass && ok;
        detail << "gdec=" << fmt(b.gamma_dec) << ": mean z " << fmt(plateau) << " in ["
               << fmt(b.lo) << "," << fmt(b.hi) << "] " << (ok ? "ok; " : "FAIL; ");
    }
    out.detail = detail.str();
    return out;
}

// ---------------------------------------------------------------------------
// 8. Invariant suite (property checks, no figures).

Outcome criterion8() {
    Outcome out;
    std::ostringstream detail;
    NormalStream rng(881122, 0);

    // superoperator outputs Hermitian and traceless; projectors fixed points
    double worst_super = 0.0, worst_fixed = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + trial % 3;
        Matrix a(n, n), b(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                a(i, j) = Complex(rng.next(), rng.next());  // general matrix
                b(i, j) = Complex(rng.next(), rng.next());
            }
        Matrix rho = b * b.adjoint();
        rho /= rho.trace().real();
        const Matrix h = (0.5 * (a + a.adjoint())).eval();
        for (const Matrix& m : {lindblad_d(a, rho), measurement_m(h, rho)}) {
            worst_super = std::max(worst_super, std::abs(m.trace().real()));
            worst_super = std::max(worst_super, std::abs(m.trace().imag()));
            worst_super = std::max(worst_super, (m - m.adjoint()).cwiseAbs().maxCoeff());
        }
        try {
            const QndSpectrum sp = qnd_spectrum(h);
            for (const Matrix& proj : sp.projectors) {
                worst_fixed =
                    std::max(worst_fixed, lindblad_d(h, proj).cwiseAbs().maxCoeff());
                worst_fixed =
                    std::max(worst_fixed, measurement_m(h, proj).cwiseAbs().maxCoeff());
            }
        } catch (const DegenerateSpectrumError&) {
        }
    }
    out.pass = out.pass && worst_super < 1e-12 && worst_fixed < 1e-9;
    detail << "superop defects " << fmt(worst_super) << "/" << fmt(worst_fixed);

    // state-space invariants after every step, all steppers
    {
        const Matrix L = measurement_op(1.0);
        const Matrix F = pauli_y();
        SimParams p;
        p.dt = 1e-4;
        p.eta = 0.5;
        p.gamma = 1.0;
        double worst_trace = 0.0, worst_herm = 0.0, worst_eig = 0.0;
        for (StepperKind kind : {StepperKind::OpenLoop, StepperKind::ClosedExpanded,
                                 StepperKind::ClosedPropagator}) {
            NormalStream noise(3344, static_cast<std::uint64_t>(kind));
            Matrix rho = from_bloch(0.3, -0.2, 0.1);
            const Controller c = Controller::adaptive_qnd(ControlTarget::Excited);
            for (long k = 0; k < 10000; ++k) {
                const double dW = noise.next() * std::sqrt(p.dt);
                const BlochVector bv = to_bloch(rho);
                const Gains g = control_gains(c, bv.x, bv.z, p.eta, p.gamma);
                if (kind == StepperKind::OpenLoop)
                    rho = step_open_loop(rho, L, p, dW).rho;
                else if (kind == StepperKind::ClosedExpanded)
                    rho = step_closed_expanded(rho, L, F, g.f, g.kappa, p, dW).rho;
                else
                    rho = step_closed_propagator(rho, L, F, g.f, g.kappa, p, dW).rho;
                worst_trace = std::max(worst_trace, std::abs(rho.trace().real() - 1.0));
                worst_herm =
                    std::max(worst_herm, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
                Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
                worst_eig = std::min(worst_eig, es.eigenvalues().minCoeff());
            }
        }
        out.pass = out.pass && worst_trace <= 1e-9 && worst_herm <= 1e-12 && worst_eig >= -1e-9;
        detail << "; step invariants tr " << fmt(worst_trace) << " herm " << fmt(worst_herm)
               << " eig " << fmt(worst_eig);
    }

    // z-only dependence of the adaptive gains
    {
        bool ok = true;
        for (int i = 0; i < 200; ++i) {
            const double z = -0.9 + 1.8 * rng.next_uniform();
            const double phi = 2 * M_PI * rng.next_uniform();
            const double r = std::sqrt(std::max(0.0, 1 - z * z)) * rng.next_uniform();
            const Gains a = control_gains(Controller::adaptive_qnd(ControlTarget::Excited),
                                          r * std::cos(phi), z, 0.5, 1.0);
            const Gains b2 = control_gains(Controller::adaptive_qnd(ControlTarget::Excited),
                                           -r * std::sin(phi), z, 0.5, 1.0);
            ok = ok && a.f == b2.f && a.kappa == b2.kappa;
        }
        out.pass = out.pass && ok;
        detail << "; z-only gains " << (ok ? "ok" : "FAIL");
    }

    // reduced-vs-full coupling residual shrinks with dt (mean over paths)
    {
        const Matrix L = measurement_op(1.0);
        const Controller c = Controller::adaptive_qnd(ControlTarget::Excited);
        const auto gap_xyxi = [&](double dt) {
            SimParams p;
            p.dt = dt;
            p.t_final = 1.0;
            p.eta = 0.5;
            p.seed = 42424;
            // identical sample instants at every resolution, so the max over
            // time is comparable between runs
            p.record_stride = static_cast<int>(std::lround(0.1 / dt));
            double acc = 0.0;
            const int n_paths = 12;
            for (std::uint64_t path = 0; path < n_paths; ++path) {
                const TrajectoryRecord full = run_trajectory(0.5 * identity(2), L, c, p, path);
                Eigen::VectorXd s0(3);
                s0 << 0.0, 0.0, 1.0;
                const ReducedTrajectory red =
                    simulate_reduced(ReducedKind::Theorem1XYXi, s0, Eigen::VectorXd(), p, path);
                double worst = 0.0;
                for (size_t t = 0; t < full.times.size(); ++t)
                    worst = std::max({worst, std::abs(full.bloch[t].x - red.states[t][0]),
                                      std::abs(full.bloch[t].y - red.states[t][1]),
                                      std::abs(full.bloch[t].xi - red.states[t][2])});
                acc += worst / n_paths;
            }
            return acc;
        };
        const double c1 = gap_xyxi(1e-3), c2 = gap_xyxi(2.5e-4);
        out.pass = out.pass && c1 < 0.05 && c1 / c2 > 1.4;
        detail << "; coupling " << fmt(c1) << "->" << fmt(c2);
    }
    out.detail = detail.str();
    return out;
}

}  // namespace

int main() {
    struct Entry {
        int id;
        const char* title;
        std::function<Outcome()> fn;
    };
    const std::vector<Entry> criteria = {
        {1, "adaptive-feedback exponential bound (fig. 1 protocol)", criterion1},
        {2, "static-output exact exponential decay", criterion2},
        {3, "open-loop selection: bound, convergence, frequencies", criterion3},
        {4, "commuting-actuator fidelity freeze", criterion4},
        {5, "expanded vs propagator stepper equivalence", criterion5},
        {6, "generator oracle cross-validation", criterion6},
        {7, "decoherence plateaus of mean z", criterion7},
        {8, "invariant property suite", criterion8},
    };

    bool all_pass = true;
    for (const Entry& entry : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = entry.fn();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[criterion %d] %s  %s (%s; %.1f s)\n", entry.id,
                    out.pass ? "PASS" : "FAIL", entry.title, out.detail.c_str(), seconds);
        std::fflush(stdout);
        all_pass = all_pass && out.pass;
    }
    std::printf(all_pass ? "acceptance: all criteria passed\n"
                         : "acceptance: FAILURES present\n");
    return all_pass ? 0 : 1;
}
