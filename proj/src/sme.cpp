#include "qnd/sme.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "qnd/rng.hpp"

namespace qnd {

namespace {

const Complex kI(0.0, 1.0);

// Kahan-Babuska compensated accumulator; summation order is fixed by
// trajectory index, so ensemble statistics do not depend on thread count.
struct Acc {
    double sum = 0.0, comp = 0.0;
    void add(double v) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

template <class MatT>
double min_eig_qubit(const MatT& rho) {
    const double a = rho(0, 0).real();
    const double d = rho(1, 1).real();
    const double det = a * d - std::norm(rho(0, 1));
    const double mean = 0.5 * (a + d);
    return mean - std::sqrt(std::max(mean * mean - det, 0.0));
}

template <class MatT>
double gershgorin_lower(const MatT& rho) {
    double lo = std::numeric_limits<double>::infinity();
    const int n = static_cast<int>(rho.rows());
    for (int i = 0; i < n; ++i) {
        double radius = 0.0;
        for (int j = 0; j < n; ++j)
            if (j != i) radius += std::abs(rho(i, j));
        lo = std::min(lo, rho(i, i).real() - radius);
    }
    return lo;
}

template <class MatT>
void project_impl(MatT& rho, double& clipped, double& worst_min_eig, bool track_min_eig) {
    const int n = static_cast<int>(rho.rows());

    MatT herm = rho.adjoint();
    rho = 0.5 * (rho + herm);
    const double tr = rho.trace().real();
    if (!(tr > 0.25 && tr < 4.0))
        throw IntegratorDivergedError("state trace diverged; reduce dt");
    rho /= tr;

    double lo;
    bool exact;
    if (n == 2) {
        lo = min_eig_qubit(rho);
        exact = true;
    } else if (!track_min_eig && gershgorin_lower(rho) >= 0.0) {
        lo = 0.0;
        exact = false;
    } else if (!track_min_eig &&
               Eigen::LLT<MatT>(rho + MatT(1e-12 * MatT::Identity(n, n))).info() ==
                   Eigen::Success) {
        lo = -1e-12;
        exact = false;
    } else {
        Eigen::SelfAdjointEigenSolver<MatT> es(rho, Eigen::EigenvaluesOnly);
        lo = es.eigenvalues().minCoeff();
        exact = true;
    }
    if (exact) worst_min_eig = std::min(worst_min_eig, lo);

    if (lo < -0.05) {
        std::ostringstream msg;
        msg << "state eigenvalue " << lo << " below -0.05; integrator diverged, reduce dt";
        throw IntegratorDivergedError(msg.str());
    }
    if (lo < -1e-12) {
        Eigen::SelfAdjointEigenSolver<MatT> es(rho);
        Eigen::VectorXd vals = es.eigenvalues();
        double removed = 0.0;
        for (int i = 0; i < n; ++i) {
            if (vals[i] < 0.0) {
                removed -= vals[i];
                vals[i] = 0.0;
            }
        }
        if (removed > 0.0) {
            clipped += removed;
            rho = es.eigenvectors() * vals.cast<Complex>().asDiagonal() *
                  es.eigenvectors().adjoint();
            const double tr2 = rho.trace().real();
            if (!(tr2 > 0.0)) throw IntegratorDivergedError("state vanished during projection");
            rho /= tr2;
        }
    }
}

// Per-trajectory integration kernel. All operator products live in
// preallocated workspace so the inner loop is allocation-free for both the
// fixed-size and the dynamic instantiations.
template <class MatT>
class Engine {
  public:
    Engine(const Matrix& L, const Matrix& F, const SimParams& params, bool track_min_eig)
        : dt_(params.dt),
          sqrt_eta_(std::sqrt(params.eta)),
          eta_(params.eta),
          gamma_dec_(params.gamma_dec),
          track_min_eig_(track_min_eig) {
        const int n = static_cast<int>(L.rows());
        L_ = L;
        Lsq_ = (L * L).eval();
        if (F.size() > 0) {
            F_ = F;
            commFL_ = (F * L - L * F).eval();
            antiFL_ = (F * L + L * F).eval();
            Fsq_ = (F * F).eval();
        } else {
            F_ = MatT::Zero(n, n);
            commFL_ = MatT::Zero(n, n);
            antiFL_ = MatT::Zero(n, n);
            Fsq_ = MatT::Zero(n, n);
        }
        P_ = R_ = W_ = Adag_ = AdA_ = K_ = C2_ = CM_ = drift_ = diff_ = X_ = T1_ = T2_ =
            MatT::Zero(n, n);
    }

    double step(MatT& rho, double f, double kappa, double dW, StepperKind kind) {
        switch (kind) {
            case StepperKind::OpenLoop: return step_open(rho, dW);
            case StepperKind::ClosedExpanded: return step_expanded(rho, f, kappa, dW);
            case StepperKind::ClosedPropagator: return step_propagator(rho, f, kappa, dW);
        }
        throw std::logic_error("unknown stepper kind");
    }

    double clipped() const { return clipped_; }
    double worst_min_eig() const { return worst_min_eig_; }

  private:
    // D(L, rho) into drift_ (plus the decay channel) and M(L, rho) into
    // diff_; returns tr((L + L^dag) rho).
    double open_terms(const MatT& rho) {
        P_.noalias() = L_ * rho;
        const double m = 2.0 * P_.trace().real();
        T1_.noalias() = L_ * P_;
        drift_.noalias() = P_ * L_;
        drift_ -= 0.5 * (T1_ + T1_.adjoint());
        add_decay(rho);
        diff_ = P_ + P_.adjoint() - m * rho;
        return m;
    }

    void add_decay(const MatT& rho) {
        if (gamma_dec_ <= 0.0) return;
        // (gamma_dec / 2) D(|g><e|, rho), hand-expanded for the qubit.
        const double g = 0.5 * gamma_dec_;
        drift_(0, 0) -= g * rho(0, 0);
        drift_(1, 1) += g * rho(0, 0).real();
        drift_(0, 1) -= 0.5 * g * rho(0, 1);
        drift_(1, 0) -= 0.5 * g * rho(1, 0);
    }

    double step_open(MatT& rho, double dW) {
        const double m = open_terms(rho);
        rho += dt_ * drift_ + (sqrt_eta_ * dW) * diff_;
        project_impl(rho, clipped_, worst_min_eig_, track_min_eig_);
        return sqrt_eta_ * m * dt_ + dW;
    }

    double step_expanded(MatT& rho, double f, double kappa, double dW) {
        P_.noalias() = L_ * rho;
        R_.noalias() = F_ * rho;
        const double m = 2.0 * P_.trace().real();
        const double c = kappa * sqrt_eta_;

        // D(A, rho) with A = L - i c F: A rho = P - i c R and
        // A^dag A = L^2 + i c (FL - LF) + c^2 F^2 need no fresh products.
        W_ = P_ - (kI * c) * R_;
        Adag_ = L_ + (kI * c) * F_;
        AdA_ = Lsq_ + (kI * c) * commFL_ + (c * c) * Fsq_;
        T1_.noalias() = W_ * Adag_;
        T2_.noalias() = AdA_ * rho;
        drift_ = T1_ - 0.5 * (T2_ + T2_.adjoint());

        // D(i kappa sqrt(1-eta) F, rho) = kappa^2 (1-eta) D(F, rho)
        if (eta_ < 1.0) {
            const double k2 = kappa * kappa * (1.0 - eta_);
            T1_.noalias() = R_ * F_;
            T2_.noalias() = Fsq_ * rho;
            drift_ += k2 * T1_ - (0.5 * k2) * (T2_ + T2_.adjoint());
        }

        K_ = R_ - R_.adjoint();  // [F, rho]
        drift_ -= (kI * f) * K_;
        T1_.noalias() = antiFL_ * rho;
        drift_ -= (kI * (0.5 * c)) * (T1_ - T1_.adjoint());  // [FL + LF, rho]
        add_decay(rho);

        diff_ = sqrt_eta_ * (P_ + P_.adjoint() - m * rho) - (kI * kappa) * K_;

        rho += dt_ * drift_ + dW * diff_;
        project_impl(rho, clipped_, worst_min_eig_, track_min_eig_);
        return sqrt_eta_ * m * dt_ + dW;
    }

    double step_propagator(MatT& rho, double f, double kappa, double dW) {
        const double m = open_terms(rho);
        const double dY = sqrt_eta_ * m * dt_ + dW;
        const double s = f * dt_ + kappa * dY;
        X_ = rho + dt_ * drift_ + (sqrt_eta_ * dW) * diff_;

        // Conjugation by exp(-i F s) to second order. Pairs of Wiener factors
        // contract to dt (the dW from s against the dW inside X, and the
        // leading dW^2 of s^2); realized dt*dW cross terms stay.
        T1_.noalias() = F_ * X_;
        T2_ = T1_ - T1_.adjoint();  // [F, X]
        X_ -= (kI * s) * T2_;

        T1_.noalias() = F_ * diff_;  // diff_ still holds M(L, rho)
        CM_ = T1_ - T1_.adjoint();
        X_ -= (kI * (kappa * sqrt_eta_ * (dt_ - dW * dW))) * CM_;

        R_.noalias() = F_ * rho;
        K_ = R_ - R_.adjoint();
        T1_.noalias() = F_ * K_;
        C2_ = T1_ + T1_.adjoint();  // [F, [F, rho]]
        X_ -= (0.5 * kappa * kappa * dt_) * C2_;

        rho = X_;
        project_impl(rho, clipped_, worst_min_eig_, track_min_eig_);
        return dY;
    }

    MatT L_, F_, Lsq_, commFL_, antiFL_, Fsq_;
    MatT P_, R_, W_, Adag_, AdA_, K_, C2_, CM_, drift_, diff_, X_, T1_, T2_;
    double dt_, sqrt_eta_, eta_, gamma_dec_;
    bool track_min_eig_;
    double clipped_ = 0.0;
    double worst_min_eig_ = 0.0;
};

template <class MatT>
TrajectoryRecord run_trajectory_impl(const Matrix& rho0, const Matrix& L,
                                     const Controller& controller, const SimParams& params,
                                     std::uint64_t index, const RunOptions& options) {
    const int n = static_cast<int>(rho0.rows());
    const bool qubit = (n == 2);
    const StepperKind kind = controller.is_null() ? StepperKind::OpenLoop : options.stepper;

    Matrix F;
    if (!controller.is_null()) F = control_actuator(controller);
    Engine<MatT> engine(L, F, params, options.track_min_eig);

    MatT rho = rho0;
    NormalStream stream(params.seed, index);
    stream.set_antithetic(options.antithetic);
    const double sqrt_dt = std::sqrt(params.dt);
    const long n_steps = std::max<long>(1, std::lround(params.t_final / params.dt));

    TrajectoryRecord rec;
    const size_t n_samples = static_cast<size_t>(n_steps / params.record_stride) + 2;
    rec.times.reserve(n_samples);
    rec.y_record.reserve(n_samples);
    rec.lyapunov.reserve(n_samples);
    if (qubit) rec.bloch.reserve(n_samples);
    if (!options.projectors.empty()) rec.fidelities.reserve(n_samples);

    double y = 0.0;
    const auto record = [&](double t) {
        rec.times.push_back(t);
        rec.y_record.push_back(y);
        Matrix dyn = rho;
        if (qubit) {
            BlochVector b;
            b.x = 2.0 * rho(1, 0).real();
            b.y = 2.0 * rho(1, 0).imag();
            b.z = rho(0, 0).real() - rho(1, 1).real();
            b.xi = std::sqrt(std::max(0.0, 1.0 - b.z));
            rec.bloch.push_back(b);
        }
        rec.lyapunov.push_back(options.lyapunov ? options.lyapunov(dyn)
                                                : std::numeric_limits<double>::quiet_NaN());
        if (!options.projectors.empty()) {
            Eigen::VectorXd q(options.projectors.size());
            for (size_t l = 0; l < options.projectors.size(); ++l)
                q[static_cast<int>(l)] = (dyn * options.projectors[l]).trace().real();
            rec.fidelities.push_back(q);
        }
    };

    record(0.0);
    const bool gains_vary = controller.kind == Controller::Kind::AdaptiveQnd ||
                            controller.kind == Controller::Kind::SmoothState;
    Gains gains{0.0, 0.0};
    if (!controller.is_null() && !gains_vary)
        gains = control_gains(controller, 0.0, 0.0, params.eta, params.gamma);

    for (long k = 0; k < n_steps; ++k) {
        if (gains_vary) {
            const double z = rho(0, 0).real() - rho(1, 1).real();
            const double x = 2.0 * rho(1, 0).real();
            gains = control_gains(controller, x, z, params.eta, params.gamma);
        }
        const double dW = stream.next() * sqrt_dt;
        y += engine.step(rho, gains.f, gains.kappa, dW, kind);
        if ((k + 1) % params.record_stride == 0 || k + 1 == n_steps)
            record(static_cast<double>(k + 1) * params.dt);
    }

    rec.terminal_state = rho;
    rec.clipped_total = engine.clipped();
    rec.worst_min_eig = engine.worst_min_eig();
    return rec;
}

ScalarStats reduce_scalar(const std::vector<TrajectoryRecord>& recs,
                          const std::function<double(const TrajectoryRecord&, size_t)>& get) {
    const size_t n_times = recs.front().times.size();
    const double n = static_cast<double>(recs.size());
    ScalarStats out;
    out.mean.resize(n_times);
    out.sem.resize(n_times);
    for (size_t t = 0; t < n_times; ++t) {
        Acc sum, sumsq;
        for (const TrajectoryRecord& r : recs) {
            const double v = get(r, t);
            sum.add(v);
            sumsq.add(v * v);
        }
        const double mean = sum.value() / n;
        out.mean[t] = mean;
        if (recs.size() < 2) {
            out.sem[t] = std::numeric_limits<double>::quiet_NaN();
        } else {
            const double var = std::max(0.0, (sumsq.value() - n * mean * mean) / (n - 1.0));
            out.sem[t] = std::sqrt(var / n);
        }
    }
    return out;
}

}  // namespace

StepResult step_open_loop(const Matrix& rho, const Matrix& L, const SimParams& params, double dW) {
    if (L.rows() != rho.rows()) throw std::invalid_argument("step_open_loop: dimension mismatch");
    if (!std::isfinite(dW)) throw std::invalid_argument("step_open_loop: dW must be finite");
    Engine<Matrix> engine(L, Matrix(), params, false);
    StepResult out;
    out.rho = rho;
    out.dy = engine.step(out.rho, 0.0, 0.0, dW, StepperKind::OpenLoop);
    return out;
}

StepResult step_closed_expanded(const Matrix& rho, const Matrix& L, const Matrix& F, double f,
                                double kappa, const SimParams& params, double dW) {
    if (L.rows() != rho.rows() || F.rows() != rho.rows())
        throw std::invalid_argument("step_closed_expanded: dimension mismatch");
    if (!std::isfinite(f) || !std::isfinite(kappa) || !std::isfinite(dW))
        throw std::invalid_argument("step_closed_expanded: gains and dW must be finite");
    Engine<Matrix> engine(L, F, params, false);
    StepResult out;
    out.rho = rho;
    out.dy = engine.step(out.rho, f, kappa, dW, StepperKind::ClosedExpanded);
    return out;
}

StepResult step_closed_propagator(const Matrix& rho, const Matrix& L, const Matrix& F, double f,
                                  double kappa, const SimParams& params, double dW) {
    if (L.rows() != rho.rows() || F.rows() != rho.rows())
        throw std::invalid_argument("step_closed_propagator: dimension mismatch");
    if (!std::isfinite(f) || !std::isfinite(kappa) || !std::isfinite(dW))
        throw std::invalid_argument("step_closed_propagator: gains and dW must be finite");
    Engine<Matrix> engine(L, F, params, false);
    StepResult out;
    out.rho = rho;
    out.dy = engine.step(out.rho, f, kappa, dW, StepperKind::ClosedPropagator);
    return out;
}

Matrix add_decoherence(const Matrix& drift, const Matrix& rho, double gamma_dec) {
    if (rho.rows() != 2 || drift.rows() != 2)
        throw std::invalid_argument("add_decoherence is qubit-specific (n = 2 required)");
    if (gamma_dec < 0) throw std::invalid_argument("add_decoherence: gamma_dec must be >= 0");
    if (gamma_dec == 0.0) return drift;
    return drift + 0.5 * gamma_dec * lindblad_d(lowering_operator(), rho);
}

Matrix project_state(Matrix rho, double* clipped, double* min_eig) {
    double clip_acc = 0.0;
    double worst = 0.0;
    project_impl(rho, clip_acc, worst, true);
    if (clipped) *clipped = clip_acc;
    if (min_eig) *min_eig = worst;
    return rho;
}

TrajectoryRecord run_trajectory(const Matrix& rho0, const Matrix& L, const Controller& controller,
                                const SimParams& params, std::uint64_t index,
                                const RunOptions& options) {
    params.validate();
    (void)DensityMatrix(rho0);      // throws on invalid initial state
    (void)HermitianOperator(L);
    if (L.rows() != rho0.rows()) throw std::invalid_argument("run_trajectory: dimension mismatch");
    if (!controller.is_null() && rho0.rows() != 2)
        throw std::invalid_argument("run_trajectory: feedback controllers require n = 2");

    switch (rho0.rows()) {
        case 2:
            return run_trajectory_impl<Eigen::Matrix2cd>(rho0, L, controller, params, index,
                                                         options);
        case 3:
            return run_trajectory_impl<Eigen::Matrix3cd>(rho0, L, controller, params, index,
                                                         options);
        case 4:
            return run_trajectory_impl<Eigen::Matrix4cd>(rho0, L, controller, params, index,
                                                         options);
        default:
            return run_trajectory_impl<Matrix>(rho0, L, controller, params, index, options);
    }
}

EnsembleStats run_ensemble(const Matrix& rho0, const Matrix& L, const Controller& controller,
                           const SimParams& params, const RunOptions& options, bool keep_records) {
    params.validate();
    std::vector<TrajectoryRecord> recs(static_cast<size_t>(params.n_traj));

    int n_threads = params.n_threads > 0
                        ? params.n_threads
                        : static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::max(1, std::min(n_threads, params.n_traj));

    if (n_threads == 1) {
        for (int i = 0; i < params.n_traj; ++i)
            recs[static_cast<size_t>(i)] =
                run_trajectory(rho0, L, controller, params, static_cast<std::uint64_t>(i), options);
    } else {
        std::atomic<int> cursor{0};
        std::mutex err_mutex;
        std::exception_ptr error;
        auto worker = [&] {
            for (;;) {
                const int i = cursor.fetch_add(1);
                if (i >= params.n_traj) return;
                try {
                    recs[static_cast<size_t>(i)] = run_trajectory(
                        rho0, L, controller, params, static_cast<std::uint64_t>(i), options);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
        if (error) std::rethrow_exception(error);
    }

    EnsembleStats stats;
    stats.n_traj = params.n_traj;
    stats.times = recs.front().times;
    if (options.lyapunov)
        stats.V = reduce_scalar(recs, [](const TrajectoryRecord& r, size_t t) {
            return r.lyapunov[t];
        });
    if (rho0.rows() == 2) {
        stats.x = reduce_scalar(recs,
                                [](const TrajectoryRecord& r, size_t t) { return r.bloch[t].x; });
        stats.y = reduce_scalar(recs,
                                [](const TrajectoryRecord& r, size_t t) { return r.bloch[t].y; });
        stats.z = reduce_scalar(recs,
                                [](const TrajectoryRecord& r, size_t t) { return r.bloch[t].z; });
    }
    for (size_t l = 0; l < options.projectors.size(); ++l)
        stats.fidelity.push_back(reduce_scalar(recs, [l](const TrajectoryRecord& r, size_t t) {
            return r.fidelities[t][static_cast<int>(l)];
        }));
    if (keep_records) stats.records = std::move(recs);
    return stats;
}

}  // namespace qnd
