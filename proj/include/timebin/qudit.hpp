#pragma once

// Linear-algebra substrate for finite-dimensional quantum states:
// kets, density operators, tensor products, partial trace.

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "timebin/errors.hpp"

namespace timebin {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

enum class Subsystem { Signal, Idler };

// Validation tolerances, sized for 16x16 problems. Overridable where a
// constructor or check accepts them explicitly.
struct Tolerances {
    double hermiticity = 1e-10;
    double eigenvalue_floor = -1e-9;
    double trace = 1e-9;
    double ket_norm = 1e-12;
};

// Pure state over the time-bin basis. Immutable after construction.
class Ket {
public:
    explicit Ket(Vector amplitudes);

    static Ket basis(int dim, int k);

    int dim() const { return static_cast<int>(amps_.size()); }
    const Vector& amplitudes() const { return amps_; }
    Complex amplitude(int k) const { return amps_(k); }

    double norm() const { return amps_.norm(); }
    bool is_normalized(double tol = Tolerances{}.ket_norm) const;

    // |v><v|
    Matrix projector() const { return amps_ * amps_.adjoint(); }

private:
    Vector amps_;
};

// Hermitian PSD trace-one operator. The constructor validates the
// invariants; use `unchecked` only for intermediates known-good by
// construction.
class DensityOperator {
public:
    explicit DensityOperator(Matrix m, const Tolerances& tol = {});

    static DensityOperator from_ket(const Ket& psi);
    static DensityOperator maximally_mixed(int dim);
    static DensityOperator unchecked(Matrix m);

    int dim() const { return static_cast<int>(mat_.rows()); }
    const Matrix& matrix() const { return mat_; }

    std::string to_json() const;
    static DensityOperator from_json(const std::string& text);

private:
    DensityOperator() = default;
    Matrix mat_;
};

// |phi> = d^{-1/2} sum_k exp(i k phi) |k>_s |k>_i, signal-major ordering.
Ket maximally_entangled(int d, double phi);

// Kronecker products; `a` carries the major (signal) index.
Ket tensor(const Ket& a, const Ket& b);
Matrix tensor(const Matrix& a, const Matrix& b);
DensityOperator tensor(const DensityOperator& a, const DensityOperator& b);

// Reduced operator of the kept subsystem of a d_s x d_i bipartite state.
Matrix partial_trace(const Matrix& rho, Subsystem keep, int d_signal, int d_idler);
DensityOperator partial_trace(const DensityOperator& rho, Subsystem keep, int d_signal,
                              int d_idler);

// Spectral decomposition of a Hermitian matrix, eigenvalues descending.
// Throws ContractViolation when the input is not Hermitian within tol.
std::vector<std::pair<double, Ket>> eigendecompose(const Matrix& rho,
                                                   const Tolerances& tol = {});

// Eigenvalues only, descending, with the same Hermiticity check.
Eigen::VectorXd hermitian_eigenvalues(const Matrix& rho, const Tolerances& tol = {});

// p |phi(phi)><phi(phi)| + (1-p) I/16 on the two-ququart space.
DensityOperator werner_state(double p, double phi);

}  // namespace timebin
