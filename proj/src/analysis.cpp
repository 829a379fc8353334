#include "qnd/analysis.hpp"

#include <cmath>
#include <sstream>

#include "qnd/rng.hpp"

namespace qnd {

namespace {

double safe_sqrt(double v) { return std::sqrt(std::max(0.0, v)); }

double sem_or_zero(const ScalarStats& s, size_t i) {
    const double v = s.sem[i];
    return std::isnan(v) ? 0.0 : v;
}

}  // namespace

LyapunovSpec LyapunovSpec::open_loop_qnd(const QndSpectrum& spectrum, double eta) {
    if (!(eta > 0 && eta <= 1)) throw std::invalid_argument("eta must lie in (0, 1]");
    LyapunovSpec spec;
    spec.kind = LyapKind::OpenLoopQnd;
    spec.bound = BoundKind::Inequality;
    spec.eta = eta;
    spec.spectrum = spectrum;
    const double gap = spectrum.min_gap();
    spec.rate = 0.5 * eta * gap * gap;
    return spec;
}

LyapunovSpec LyapunovSpec::static_output_target(double theta_bar, double alpha_bar, double eta,
                                                double gamma) {
    if (eta != 1.0)
        throw std::invalid_argument("the static-output equality certificate requires eta = 1");
    LyapunovSpec spec;
    spec.kind = LyapKind::StaticOutputTarget;
    spec.bound = BoundKind::Equality;
    spec.eta = eta;
    spec.gamma = gamma;
    spec.target = target_state(Controller::static_output(theta_bar, alpha_bar));
    const double s = std::sin(theta_bar);
    spec.rate = 2.0 * gamma * s * s;
    return spec;
}

LyapunovSpec LyapunovSpec::adaptive(ControlTarget goal, double eta, double gamma) {
    if (!(eta > 0 && eta <= 1)) throw std::invalid_argument("eta must lie in (0, 1]");
    LyapunovSpec spec;
    spec.kind = LyapKind::AdaptiveQnd;
    spec.bound = BoundKind::Inequality;
    spec.eta = eta;
    spec.gamma = gamma;
    spec.goal = goal;
    spec.rate = 0.25 * eta * gamma;
    return spec;
}

double lyapunov_value(const LyapunovSpec& spec, const Matrix& rho) {
    switch (spec.kind) {
        case LyapKind::OpenLoopQnd: {
            const int n = spec.spectrum.dim();
            Eigen::VectorXd q(n);
            for (int l = 0; l < n; ++l)
                q[l] = std::max(0.0, fidelity(rho, spec.spectrum.projectors[static_cast<size_t>(l)]));
            double v = 0.0;
            for (int l = 0; l < n; ++l)
                for (int k = 0; k < l; ++k) v += std::sqrt(q[l] * q[k]);
            return v;
        }
        case LyapKind::StaticOutputTarget:
            return 1.0 - fidelity(rho, spec.target);
        case LyapKind::AdaptiveQnd: {
            const double z = expectation(pauli_z(), rho);
            return spec.goal == ControlTarget::Excited ? safe_sqrt(1.0 - z) : safe_sqrt(1.0 + z);
        }
    }
    throw std::logic_error("unreachable");
}

LyapunovFn LyapunovSpec::as_fn() const {
    LyapunovSpec copy = *this;
    return [copy](const Matrix& rho) { return lyapunov_value(copy, rho); };
}

double generator_openloop_xi(const Eigen::VectorXd& xi, const Eigen::VectorXd& lambdas,
                             double eta) {
    if (xi.size() != lambdas.size())
        throw std::invalid_argument("generator_openloop_xi: dimension mismatch");
    double acc = 0.0;
    for (int l = 0; l < xi.size(); ++l)
        for (int k = 0; k < l; ++k) {
            const double gap = lambdas[l] - lambdas[k];
            acc += gap * gap * xi[l] * xi[k];
        }
    return -0.5 * eta * acc;
}

double generator_adaptive_xyxi(double x, double /*y*/, double xi, double eta, double gamma) {
    const double z = 1.0 - xi * xi;
    return -0.5 * eta * gamma * (0.5 + 1.5 * z * z + 0.5 * x * x) * xi;
}

void openloop_xi_coeffs(const Eigen::VectorXd& xi, const Eigen::VectorXd& lambdas, double eta,
                        Eigen::VectorXd& mu, Eigen::VectorXd& sigma) {
    const int n = static_cast<int>(xi.size());
    mu.resize(n);
    sigma.resize(n);
    double varpi = 0.0;
    for (int l = 0; l < n; ++l) varpi += lambdas[l] * xi[l] * xi[l];
    const double sqrt_eta = std::sqrt(eta);
    for (int l = 0; l < n; ++l) {
        const double dev = lambdas[l] - varpi;
        mu[l] = -0.5 * eta * dev * dev * xi[l];
        sigma[l] = sqrt_eta * dev * xi[l];
    }
}

void adaptive_xyxi_coeffs(const Eigen::VectorXd& s, double eta, double gamma, Eigen::VectorXd& mu,
                          Eigen::VectorXd& sigma) {
    if (s.size() != 3) throw std::invalid_argument("adaptive_xyxi_coeffs: state must be (x,y,xi)");
    const double x = s[0], y = s[1], xi = s[2];
    const double w = xi * xi;  // 1 - z
    const double eg = eta * gamma;
    const double root2eg = std::sqrt(2.0 * eg);
    mu.resize(3);
    sigma.resize(3);
    mu[0] = -eg * w * (2.0 - w) * (1.0 - w) + 2.0 * eg * w - gamma * x - eg * w * w * x;
    sigma[0] = root2eg * (1.0 - w) * (w - x);
    mu[1] = -gamma * y;
    sigma[1] = -root2eg * (1.0 - w) * y;
    const double gap = (2.0 - w) - x;
    mu[2] = 0.5 * eg * (-(2.0 - w) * x + w * (1.0 - w) - 0.5 * gap * gap) * xi;
    sigma[2] = -std::sqrt(0.5 * eg) * gap * xi;
}

double generator_finite_difference(const ScalarField& V, const CoeffField& coeffs,
                                   const Eigen::VectorXd& x, double h) {
    const int n = static_cast<int>(x.size());
    Eigen::VectorXd mu, sigma;
    coeffs(x, mu, sigma);

    double out = 0.0;
    Eigen::VectorXd xp = x, xm = x;
    const double v0 = V(x);
    for (int i = 0; i < n; ++i) {
        xp[i] = x[i] + h;
        xm[i] = x[i] - h;
        out += mu[i] * (V(xp) - V(xm)) / (2.0 * h);
        out += 0.5 * sigma[i] * sigma[i] * (V(xp) - 2.0 * v0 + V(xm)) / (h * h);
        xp[i] = x[i];
        xm[i] = x[i];
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < i; ++j) {
            Eigen::VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
            xpp[i] += h;
            xpp[j] += h;
            xpm[i] += h;
            xpm[j] -= h;
            xmp[i] -= h;
            xmp[j] += h;
            xmm[i] -= h;
            xmm[j] -= h;
            const double mixed = (V(xpp) - V(xpm) - V(xmp) + V(xmm)) / (4.0 * h * h);
            out += sigma[i] * sigma[j] * mixed;  // twice the (i,j) term, i != j
        }
    }
    return out;
}

ReducedTrajectory simulate_reduced(ReducedKind kind, const Eigen::VectorXd& initial,
                                   const Eigen::VectorXd& lambdas, const SimParams& params,
                                   std::uint64_t trajectory_index) {
    params.validate();
    Eigen::VectorXd state = initial;
    if (kind == ReducedKind::Lemma1Xi) {
        if (state.size() != lambdas.size())
            throw std::invalid_argument("simulate_reduced: xi and lambdas sizes differ");
        if (std::abs(state.squaredNorm() - 1.0) > 1e-9)
            throw std::invalid_argument("simulate_reduced: xi must satisfy sum xi^2 = 1");
        if (state.minCoeff() < -1e-12)
            throw std::invalid_argument("simulate_reduced: xi components must be non-negative");
    } else if (state.size() != 3) {
        throw std::invalid_argument("simulate_reduced: (x,y,xi) state expected");
    }

    NormalStream stream(params.seed, trajectory_index);
    const double sqrt_dt = std::sqrt(params.dt);
    const long n_steps = std::max<long>(1, std::lround(params.t_final / params.dt));

    ReducedTrajectory out;
    out.times.push_back(0.0);
    out.states.push_back(state);

    Eigen::VectorXd mu, sigma;
    for (long k = 0; k < n_steps; ++k) {
        if (kind == ReducedKind::Lemma1Xi)
            openloop_xi_coeffs(state, lambdas, params.eta, mu, sigma);
        else
            adaptive_xyxi_coeffs(state, params.eta, params.gamma, mu, sigma);
        const double dW = stream.next() * sqrt_dt;
        state += params.dt * mu + dW * sigma;

        if (kind == ReducedKind::Lemma1Xi) {
            for (int i = 0; i < state.size(); ++i) state[i] = std::max(0.0, state[i]);
            const double norm = state.norm();
            if (!(norm > 0.25 && norm < 4.0))
                throw IntegratorDivergedError("reduced xi state diverged; reduce dt");
            state /= norm;
        } else {
            state[2] = std::min(std::max(state[2], 0.0), std::sqrt(2.0));
            const double z = 1.0 - state[2] * state[2];
            const double norm2 = state[0] * state[0] + state[1] * state[1] + z * z;
            if (norm2 > 1.0) {
                if (norm2 > 16.0)
                    throw IntegratorDivergedError("reduced (x,y,xi) state diverged; reduce dt");
                const double scale = 1.0 / std::sqrt(norm2);
                state[0] *= scale;
                state[1] *= scale;
                state[2] = safe_sqrt(1.0 - z * scale);
            }
        }
        if ((k + 1) % params.record_stride == 0 || k + 1 == n_steps) {
            out.times.push_back(static_cast<double>(k + 1) * params.dt);
            out.states.push_back(state);
        }
    }
    return out;
}

GeneratorEstimate mc_generator_estimate(const Matrix& rho, const Matrix& L,
                                        const Controller& controller, const LyapunovFn& V,
                                        const SimParams& params, int delta_steps, int n_samples,
                                        StepperKind stepper) {
    if (delta_steps < 1) throw std::invalid_argument("delta_steps must be at least 1");
    if (n_samples < 2) throw std::invalid_argument("n_samples must be at least 2");

    SimParams burst = params;
    burst.t_final = params.dt * delta_steps;
    burst.record_stride = delta_steps;
    burst.n_traj = 1;

    RunOptions opts;
    opts.stepper = stepper;
    const double delta = burst.t_final;
    const double v0 = V(rho);

    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        double pair_mean = 0.0;
        for (int anti = 0; anti < 2; ++anti) {
            opts.antithetic = (anti == 1);
            const TrajectoryRecord rec = run_trajectory(
                rho, L, controller, burst, static_cast<std::uint64_t>(i), opts);
            pair_mean += 0.5 * V(rec.terminal_state);
        }
        const double g = (pair_mean - v0) / delta;
        sum += g;
        sumsq += g * g;
    }
    GeneratorEstimate est;
    est.n_samples = n_samples;
    est.value = sum / n_samples;
    const double var =
        std::max(0.0, (sumsq - n_samples * est.value * est.value) / (n_samples - 1.0));
    est.sem = std::sqrt(var / n_samples);
    return est;
}

BoundVerdict check_exponential_bound(const std::vector<double>& times, const ScalarStats& v_stats,
                                     const LyapunovSpec& spec, double v0) {
    if (times.size() != v_stats.mean.size())
        throw std::invalid_argument("check_exponential_bound: times and stats sizes differ");
    BoundVerdict verdict;
    verdict.rate = spec.rate;
    verdict.v0 = v0;
    verdict.worst_margin = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < times.size(); ++i) {
        const double bound = std::exp(-spec.rate * times[i]) * v0;
        const double sem = sem_or_zero(v_stats, i);
        double margin;
        if (spec.bound == BoundKind::Inequality)
            margin = v_stats.mean[i] - (bound * 1.02 + 3.0 * sem);
        else
            margin = std::abs(v_stats.mean[i] - bound) - (3.0 * sem + 0.02 * bound);
        if (margin > verdict.worst_margin) {
            verdict.worst_margin = margin;
            verdict.worst_time = times[i];
        }
    }
    verdict.pass = verdict.worst_margin <= 0.0;
    return verdict;
}

PStabilityVerdict check_p_stability(const std::vector<TrajectoryRecord>& records, double eta,
                                    double gamma) {
    if (records.empty()) throw std::invalid_argument("check_p_stability: no trajectories");
    if (records.front().bloch.empty())
        throw std::invalid_argument("check_p_stability: qubit Bloch records required");

    const double rate = 0.25 * eta * gamma;
    const size_t n_times = records.front().times.size();
    const double n = static_cast<double>(records.size());

    const auto norm_at = [](const TrajectoryRecord& r, size_t t) {
        const BlochVector& b = r.bloch[t];
        return std::sqrt(b.x * b.x + b.y * b.y + b.xi * b.xi);
    };
    const double norm0 = norm_at(records.front(), 0);

    PStabilityVerdict verdict;
    verdict.worst_margin = -std::numeric_limits<double>::infinity();
    for (size_t t = 0; t < n_times; ++t) {
        double sum = 0.0, sumsq = 0.0;
        for (const TrajectoryRecord& r : records) {
            const double v = norm_at(r, t);
            sum += v;
            sumsq += v * v;
        }
        const double mean = sum / n;
        const double sem =
            n > 1 ? std::sqrt(std::max(0.0, (sumsq - n * mean * mean) / (n - 1.0)) / n) : 0.0;
        const double decay = std::exp(-rate * records.front().times[t]);
        const double margin = mean - (std::sqrt(3.0) * norm0 * decay * 1.05 + 3.0 * sem);
        verdict.worst_margin = std::max(verdict.worst_margin, margin);
        if (norm0 > 0.0) verdict.fitted_c = std::max(verdict.fitted_c, mean / (norm0 * decay));
    }
    verdict.pass = verdict.worst_margin <= 0.0;
    return verdict;
}

}  // namespace qnd
