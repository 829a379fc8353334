#include "qnd/control.hpp"

#include <cmath>
#include <sstream>

namespace qnd {

namespace {

const Complex kI(0.0, 1.0);

void require_qubit(const Controller& c, const Matrix& rho) {
    if (!c.is_null() && rho.rows() != 2)
        throw std::invalid_argument(std::string(c.name()) +
                                    " controller is qubit-specific (n = 2 required)");
}

Matrix rotation_about_z(double alpha) {
    Matrix u = Matrix::Zero(2, 2);
    u(0, 0) = std::exp(-kI * (alpha / 2.0));
    u(1, 1) = std::exp(kI * (alpha / 2.0));
    return u;
}

}  // namespace

Controller Controller::null_control() { return Controller{}; }

Controller Controller::static_output(double theta_bar, double alpha_bar) {
    if (!(theta_bar > 0.0 && theta_bar < M_PI))
        throw std::invalid_argument("static_output: theta_bar must lie strictly in (0, pi)");
    Controller c;
    c.kind = Kind::StaticOutput;
    c.theta_bar = theta_bar;
    c.alpha_bar = std::fmod(std::fmod(alpha_bar, 2.0 * M_PI) + 2.0 * M_PI, 2.0 * M_PI);
    return c;
}

Controller Controller::adaptive_qnd(ControlTarget target) {
    Controller c;
    c.kind = Kind::AdaptiveQnd;
    c.target = target;
    return c;
}

Controller Controller::smooth_state(double alpha, double beta, double eta) {
    if (!(alpha > 0.0) || !(beta > 0.0))
        throw std::invalid_argument("smooth_state: alpha and beta must be positive");
    const double margin = beta * beta / (8.0 * alpha * eta);
    if (!(margin < 1.0)) {
        std::ostringstream msg;
        msg << "smooth_state: beta^2/(8 alpha eta) = " << margin << " must be below 1";
        throw std::invalid_argument(msg.str());
    }
    Controller c;
    c.kind = Kind::SmoothState;
    c.alpha = alpha;
    c.beta = beta;
    return c;
}

const char* Controller::name() const {
    switch (kind) {
        case Kind::Null: return "null";
        case Kind::StaticOutput: return "static_output";
        case Kind::AdaptiveQnd: return "adaptive_qnd";
        case Kind::SmoothState: return "smooth_state";
    }
    return "unknown";
}

Gains control_gains(const Controller& c, double x, double z, double eta, double gamma) {
    switch (c.kind) {
        case Controller::Kind::Null:
            return {0.0, 0.0};
        case Controller::Kind::StaticOutput: {
            const double s = std::sin(c.theta_bar);
            return {-0.5 * gamma * s * std::cos(c.theta_bar), std::sqrt(0.5 * gamma) * s};
        }
        case Controller::Kind::AdaptiveQnd: {
            // Ground target is the sigma_x mirror of the excited-target law,
            // which flips the sign of f as well as z in kappa.
            const double half_eg = 0.5 * eta * gamma;
            if (c.target == ControlTarget::Excited)
                return {-half_eg * (1.0 - z * z), std::sqrt(half_eg) * (1.0 - z)};
            return {half_eg * (1.0 - z * z), std::sqrt(half_eg) * (1.0 + z)};
        }
        case Controller::Kind::SmoothState:
            return {-2.0 * c.alpha * x + c.beta * (1.0 - z), 0.0};
    }
    return {0.0, 0.0};
}

Matrix control_actuator(const Controller& c) {
    switch (c.kind) {
        case Controller::Kind::Null:
            return Matrix::Zero(2, 2);
        case Controller::Kind::StaticOutput: {
            const Matrix u = rotation_about_z(c.alpha_bar);
            return u * pauli_y() * u.adjoint();
        }
        default:
            return pauli_y();
    }
}

ControlOutput evaluate(const Controller& c, const Matrix& rho, const SimParams& params) {
    require_qubit(c, rho);
    ControlOutput out;
    out.actuator = control_actuator(c);
    if (c.is_null()) return out;
    const BlochVector b = to_bloch(rho);
    const Gains g = control_gains(c, b.x, b.z, params.eta, params.gamma);
    if (!std::isfinite(g.f) || !std::isfinite(g.kappa))
        throw std::invalid_argument("controller produced non-finite gains");
    out.f = g.f;
    out.kappa = g.kappa;
    return out;
}

Matrix target_state(const Controller& c) {
    switch (c.kind) {
        case Controller::Kind::Null:
            throw std::invalid_argument("the null controller has no target state");
        case Controller::Kind::StaticOutput: {
            Matrix rho(2, 2);
            rho << 1.0 + std::cos(c.theta_bar), std::sin(c.theta_bar),  //
                std::sin(c.theta_bar), 1.0 - std::cos(c.theta_bar);
            rho *= 0.5;
            const Matrix u = rotation_about_z(c.alpha_bar);
            return u * rho * u.adjoint();
        }
        case Controller::Kind::AdaptiveQnd:
            return c.target == ControlTarget::Excited ? excited_projector() : ground_projector();
        case Controller::Kind::SmoothState:
            return excited_projector();
    }
    throw std::logic_error("unreachable");
}

bool lemma2_invariance_witness(const Matrix& F, int ell, const Matrix& L) {
    const QndSpectrum spec = qnd_spectrum(L);
    if (ell < 0 || ell >= spec.dim())
        throw std::invalid_argument("lemma2_invariance_witness: eigenstate index out of range");
    return commutator(F, spec.projectors[static_cast<size_t>(ell)]).norm() <= 1e-12;
}

}  // namespace qnd
