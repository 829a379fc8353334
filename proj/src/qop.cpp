#include "qnd/qop.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace qnd {

namespace {

const Complex kI(0.0, 1.0);

void require_square(const Matrix& m, const char* name) {
    if (m.rows() != m.cols() || m.rows() < 1) {
        std::ostringstream msg;
        msg << name << " must be a square matrix, got " << m.rows() << "x" << m.cols();
        throw std::invalid_argument(msg.str());
    }
}

void require_same_dim(const Matrix& a, const Matrix& b, const char* where) {
    require_square(a, where);
    require_square(b, where);
    if (a.rows() != b.rows()) {
        std::ostringstream msg;
        msg << where << ": dimension mismatch (" << a.rows() << " vs " << b.rows() << ")";
        throw std::invalid_argument(msg.str());
    }
}

double hermiticity_defect(const Matrix& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace

Matrix pauli_x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

Matrix pauli_y() {
    Matrix m(2, 2);
    m << 0, -kI, kI, 0;
    return m;
}

Matrix pauli_z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

Matrix identity(int n) { return Matrix::Identity(n, n); }

Matrix excited_projector() {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 1.0;
    return m;
}

Matrix ground_projector() {
    Matrix m = Matrix::Zero(2, 2);
    m(1, 1) = 1.0;
    return m;
}

Matrix lowering_operator() {
    Matrix m = Matrix::Zero(2, 2);
    m(1, 0) = 1.0;
    return m;
}

HermitianOperator::HermitianOperator(Matrix entries, double tol) : m_(std::move(entries)) {
    require_square(m_, "HermitianOperator");
    const double defect = hermiticity_defect(m_);
    if (defect > tol) {
        std::ostringstream msg;
        msg << "operator is not Hermitian (max |A - A^dag| = " << defect << ")";
        throw std::invalid_argument(msg.str());
    }
}

DensityMatrix::DensityMatrix(Matrix entries, double herm_tol, double trace_tol, double eig_tol)
    : m_(std::move(entries)) {
    require_square(m_, "DensityMatrix");
    const double defect = hermiticity_defect(m_);
    if (defect > herm_tol) {
        std::ostringstream msg;
        msg << "state is not Hermitian (defect " << defect << ")";
        throw std::invalid_argument(msg.str());
    }
    const double tr = m_.trace().real();
    if (std::abs(tr - 1.0) > trace_tol) {
        std::ostringstream msg;
        msg << "state trace is " << tr << ", expected 1";
        throw std::invalid_argument(msg.str());
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < -eig_tol) {
        std::ostringstream msg;
        msg << "state is not positive (min eigenvalue " << min_eig << ")";
        throw std::invalid_argument(msg.str());
    }
}

double QndSpectrum::min_gap() const {
    double gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i + 1 < eigenvalues.size(); ++i)
        gap = std::min(gap, eigenvalues[i + 1] - eigenvalues[i]);
    return gap;
}

Matrix lindblad_d(const Matrix& op, const Matrix& rho) {
    require_same_dim(op, rho, "lindblad_d");
    const Matrix opd = op.adjoint();
    const Matrix opd_op = opd * op;
    return op * rho * opd - 0.5 * (opd_op * rho + rho * opd_op);
}

Matrix measurement_m(const Matrix& op, const Matrix& rho) {
    require_same_dim(op, rho, "measurement_m");
    const Matrix sym = op * rho + rho * op.adjoint();
    const double avg = ((op + op.adjoint()) * rho).trace().real();
    return sym - avg * rho;
}

Matrix commutator(const Matrix& a, const Matrix& b) {
    require_same_dim(a, b, "commutator");
    return a * b - b * a;
}

double expectation(const Matrix& observable, const Matrix& rho) {
    require_same_dim(observable, rho, "expectation");
    return (observable * rho).trace().real();
}

double fidelity(const Matrix& rho, const Matrix& rho_bar) {
    require_same_dim(rho, rho_bar, "fidelity");
    return (rho * rho_bar).trace().real();
}

double trace_distance(const Matrix& a, const Matrix& b) {
    require_same_dim(a, b, "trace_distance");
    Eigen::SelfAdjointEigenSolver<Matrix> es(a - b, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

double purity(const Matrix& rho) { return (rho * rho).trace().real(); }

BlochVector to_bloch(const Matrix& rho) {
    require_square(rho, "to_bloch");
    if (rho.rows() != 2) throw std::invalid_argument("to_bloch requires a qubit state");
    BlochVector b;
    b.x = 2.0 * rho(1, 0).real();
    b.y = 2.0 * rho(1, 0).imag();
    b.z = rho(0, 0).real() - rho(1, 1).real();
    b.xi = std::sqrt(std::max(0.0, 1.0 - b.z));
    return b;
}

Matrix from_bloch(const BlochVector& b) { return from_bloch(b.x, b.y, b.z); }

Matrix from_bloch(double x, double y, double z) {
    const double norm2 = x * x + y * y + z * z;
    if (norm2 > 1.0 + 1e-9) {
        std::ostringstream msg;
        msg << "Bloch vector norm " << std::sqrt(norm2) << " exceeds 1";
        throw std::invalid_argument(msg.str());
    }
    Matrix rho(2, 2);
    rho(0, 0) = 0.5 * (1.0 + z);
    rho(1, 1) = 0.5 * (1.0 - z);
    rho(1, 0) = 0.5 * Complex(x, y);
    rho(0, 1) = std::conj(rho(1, 0));
    return rho;
}

QndSpectrum qnd_spectrum(const Matrix& op) {
    require_square(op, "qnd_spectrum");
    if (hermiticity_defect(op) > 1e-12)
        throw std::invalid_argument("qnd_spectrum requires a Hermitian operator");

    Eigen::SelfAdjointEigenSolver<Matrix> es(op);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");

    QndSpectrum spec;
    spec.eigenvalues = es.eigenvalues();  // ascending
    const int n = static_cast<int>(spec.eigenvalues.size());
    for (int i = 0; i + 1 < n; ++i) {
        const double gap = spec.eigenvalues[i + 1] - spec.eigenvalues[i];
        if (gap < 1e-9) {
            std::ostringstream msg;
            msg << "degenerate spectrum: eigenvalue gap " << gap << " below 1e-9";
            throw DegenerateSpectrumError(msg.str());
        }
    }

    spec.projectors.reserve(n);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXcd v = es.eigenvectors().col(i);
        // Fix the global phase: largest-magnitude component real-positive.
        int imax = 0;
        for (int k = 1; k < n; ++k)
            if (std::abs(v[k]) > std::abs(v[imax])) imax = k;
        const Complex pivot = v[imax];
        if (std::abs(pivot) > 0) v *= std::conj(pivot) / std::abs(pivot);
        spec.projectors.push_back(v * v.adjoint());
    }
    return spec;
}

}  // namespace qnd
