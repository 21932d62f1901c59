#pragma once

// Shared test utilities: random states and operators with seeded
// generators, independent of the library's sampling paths.

#include <complex>
#include <random>

#include "timebin/qudit.hpp"

namespace test_helpers {

using timebin::Complex;
using timebin::Matrix;
using timebin::Vector;

inline Matrix random_ginibre(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix g(dim, dim);
    for (int r = 0; r < dim; ++r) {
        for (int c = 0; c < dim; ++c) {
            g(r, c) = Complex(normal(rng), normal(rng));
        }
    }
    return g;
}

// Random full-rank density matrix, G G^dag / Tr.
inline Matrix random_density_matrix(int dim, std::mt19937_64& rng) {
    const Matrix g = random_ginibre(dim, rng);
    Matrix m = g * g.adjoint();
    return m / m.trace().real();
}

inline timebin::DensityOperator random_state(int dim, std::mt19937_64& rng) {
    return timebin::DensityOperator::unchecked(random_density_matrix(dim, rng));
}

// Haar-ish random unitary via QR of a Ginibre matrix.
inline Matrix random_unitary(int dim, std::mt19937_64& rng) {
    const Matrix g = random_ginibre(dim, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    return q;
}

inline Vector random_ket(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(dim);
    for (int i = 0; i < dim; ++i) {
        v(i) = Complex(normal(rng), normal(rng));
    }
    return v / v.norm();
}

}  // namespace test_helpers
