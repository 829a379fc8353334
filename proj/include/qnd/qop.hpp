#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

namespace qnd {

using Matrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

// Thrown when a measurement operator fails the non-degeneracy assumption.
class DegenerateSpectrumError : public std::runtime_error {
  public:
    explicit DegenerateSpectrumError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Pauli matrices and basis states (|e> = (1,0), z = +1; |g> = (0,1), z = -1).

Matrix pauli_x();
Matrix pauli_y();
Matrix pauli_z();
Matrix identity(int n);
Matrix excited_projector();  // |e><e|
Matrix ground_projector();   // |g><g|
Matrix lowering_operator();  // |g><e|

// ---------------------------------------------------------------------------
// Validated value types.

// n x n Hermitian matrix (measurement operator L, actuation Hamiltonian F).
class HermitianOperator {
  public:
    explicit HermitianOperator(Matrix entries, double tol = 1e-12);

    const Matrix& matrix() const { return m_; }
    int dim() const { return static_cast<int>(m_.rows()); }

  private:
    Matrix m_;
};

// Positive unit-trace Hermitian matrix: the simulated state.
class DensityMatrix {
  public:
    explicit DensityMatrix(Matrix entries, double herm_tol = 1e-12, double trace_tol = 1e-9,
                           double eig_tol = 1e-9);

    const Matrix& matrix() const { return m_; }
    int dim() const { return static_cast<int>(m_.rows()); }

  private:
    Matrix m_;
};

// Qubit Bloch coordinates plus the distance-like coordinate xi = sqrt(1 - z).
struct BlochVector {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double xi = 1.0;
};

// Eigenvalues (strictly ascending) and rank-1 eigenprojectors of a
// non-degenerate Hermitian measurement operator. The projectors are the
// steady-state family of the open-loop dynamics.
struct QndSpectrum {
    Eigen::VectorXd eigenvalues;
    std::vector<Matrix> projectors;

    int dim() const { return static_cast<int>(eigenvalues.size()); }
    double min_gap() const;
};

// ---------------------------------------------------------------------------
// Superoperators. Both results are Hermitian and traceless for any matrix
// argument; lindblad_d accepts non-Hermitian operators (closed-loop use).

// D(L, rho) = L rho L^dag - 1/2 {L^dag L, rho}
Matrix lindblad_d(const Matrix& op, const Matrix& rho);

// M(L, rho) = L rho + rho L^dag - tr((L + L^dag) rho) rho
Matrix measurement_m(const Matrix& op, const Matrix& rho);

Matrix commutator(const Matrix& a, const Matrix& b);
double expectation(const Matrix& observable, const Matrix& rho);
double fidelity(const Matrix& rho, const Matrix& rho_bar);  // tr(rho rho_bar)
double trace_distance(const Matrix& a, const Matrix& b);
double purity(const Matrix& rho);

// ---------------------------------------------------------------------------
// Qubit chart.

BlochVector to_bloch(const Matrix& rho);
Matrix from_bloch(const BlochVector& b);
Matrix from_bloch(double x, double y, double z);

// ---------------------------------------------------------------------------
// Spectral decomposition with the non-degeneracy gate (gap > 1e-9). Projector
// phases are fixed by making the largest-magnitude eigenvector component
// real-positive so repeated runs serialize identically.
QndSpectrum qnd_spectrum(const Matrix& op);

}  // namespace qnd
