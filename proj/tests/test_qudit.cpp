#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "timebin/qudit.hpp"

using namespace timebin;
using test_helpers::random_density_matrix;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("maximally_entangled examples") {
    SUBCASE("d=2, phi=0 is the Bell state") {
        const Ket bell = maximally_entangled(2, 0.0);
        REQUIRE(bell.dim() == 4);
        CHECK(std::abs(bell.amplitude(0) - Complex(1.0 / std::sqrt(2.0), 0.0)) < 1e-15);
        CHECK(std::abs(bell.amplitude(3) - Complex(1.0 / std::sqrt(2.0), 0.0)) < 1e-15);
        CHECK(std::abs(bell.amplitude(1)) == 0.0);
        CHECK(std::abs(bell.amplitude(2)) == 0.0);
    }
    SUBCASE("d=4, phi=0 has amplitude 1/2 on every |kk>") {
        const Ket phi = maximally_entangled(4, 0.0);
        REQUIRE(phi.dim() == 16);
        for (int k = 0; k < 4; ++k) {
            CHECK(std::abs(phi.amplitude(5 * k) - Complex(0.5, 0.0)) < 1e-15);
        }
        CHECK(phi.is_normalized());
    }
    SUBCASE("d=4, phi=pi alternates signs") {
        const Ket phi = maximally_entangled(4, kPi);
        for (int k = 0; k < 4; ++k) {
            const double expected = (k % 2 == 0) ? 0.5 : -0.5;
            CHECK(phi.amplitude(5 * k).real() == doctest::Approx(expected).epsilon(1e-12));
            CHECK(std::abs(phi.amplitude(5 * k).imag()) < 1e-12);
        }
    }
    SUBCASE("d < 2 rejected") {
        CHECK_THROWS_AS(maximally_entangled(1, 0.0), InvalidDimension);
    }
    SUBCASE("normalized for d in [2,8] and a 16-point phi grid") {
        for (int d = 2; d <= 8; ++d) {
            for (int i = 0; i < 16; ++i) {
                const double phi = 2.0 * kPi * i / 16.0;
                CHECK(maximally_entangled(d, phi).is_normalized());
            }
        }
    }
}

TEST_CASE("tensor products") {
    SUBCASE("|0> (x) |1> = |01>") {
        const Ket product = tensor(Ket::basis(2, 0), Ket::basis(2, 1));
        REQUIRE(product.dim() == 4);
        CHECK(std::abs(product.amplitude(1) - Complex(1.0, 0.0)) < 1e-15);
    }
    SUBCASE("I/4 (x) I/4 = I/16") {
        const auto result = tensor(DensityOperator::maximally_mixed(4),
                                   DensityOperator::maximally_mixed(4));
        CHECK((result.matrix() - Matrix::Identity(16, 16) / 16.0).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("|+><+| (x) |0><0| is a rank-1 projector on span{|00>,|10>}") {
        Vector plus(2);
        plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
        const Matrix result = tensor(Matrix(plus * plus.adjoint()),
                                     Ket::basis(2, 0).projector());
        const auto eigs = hermitian_eigenvalues(result);
        CHECK(eigs(0) == doctest::Approx(1.0));
        CHECK(std::abs(eigs(1)) < 1e-12);
        // support check: no weight on idler index 1
        CHECK(std::abs(result(1, 1)) < 1e-15);
        CHECK(std::abs(result(3, 3)) < 1e-15);
        CHECK(std::abs(result(0, 2)) == doctest::Approx(0.5));
    }
    SUBCASE("trace is multiplicative") {
        std::mt19937_64 rng(7);
        const Matrix a = random_density_matrix(3, rng) * 1.7;
        const Matrix b = random_density_matrix(5, rng) * 0.4;
        CHECK(std::abs(tensor(a, b).trace() - a.trace() * b.trace()) < 1e-12);
    }
}

TEST_CASE("partial_trace") {
    SUBCASE("maximally entangled state has maximally mixed marginal") {
        const auto rho = DensityOperator::from_ket(maximally_entangled(4, 0.3));
        const Matrix marginal = partial_trace(rho.matrix(), Subsystem::Signal, 4, 4);
        CHECK((marginal - Matrix::Identity(4, 4) / 4.0).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("product states separate") {
        std::mt19937_64 rng(11);
        for (int trial = 0; trial < 20; ++trial) {
            const Matrix a = random_density_matrix(4, rng);
            const Matrix b = random_density_matrix(4, rng);
            const Matrix joint = tensor(a, b);
            CHECK((partial_trace(joint, Subsystem::Signal, 4, 4) - a).norm() < 1e-10);
            CHECK((partial_trace(joint, Subsystem::Idler, 4, 4) - b).norm() < 1e-10);
        }
    }
    SUBCASE("I/16 reduces to I/4") {
        const Matrix id16 = Matrix::Identity(16, 16) / 16.0;
        const Matrix reduced = partial_trace(id16, Subsystem::Idler, 4, 4);
        CHECK((reduced - Matrix::Identity(4, 4) / 4.0).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("trace preserved, dims validated") {
        std::mt19937_64 rng(13);
        const Matrix rho = random_density_matrix(16, rng);
        CHECK(partial_trace(rho, Subsystem::Signal, 4, 4).trace().real() ==
              doctest::Approx(1.0).epsilon(1e-10));
        CHECK_THROWS_AS(partial_trace(rho, Subsystem::Signal, 4, 3), InvalidDimension);
    }
}

TEST_CASE("eigendecompose") {
    SUBCASE("identity") {
        const auto eig = eigendecompose(Matrix::Identity(4, 4) / 4.0);
        REQUIRE(eig.size() == 4);
        for (const auto& [lambda, vec] : eig) {
            CHECK(lambda == doctest::Approx(0.25));
        }
    }
    SUBCASE("pure projector") {
        const auto eig = eigendecompose(Ket::basis(4, 0).projector());
        CHECK(eig[0].first == doctest::Approx(1.0));
        for (int i = 1; i < 4; ++i) CHECK(std::abs(eig[i].first) < 1e-12);
    }
    SUBCASE("Werner-form spectrum") {
        // 0.5 |phi><phi| + 0.5 I/16: one eigenvalue 0.53125, fifteen 1/32
        const auto rho = werner_state(0.5, 0.0);
        const auto eigs = hermitian_eigenvalues(rho.matrix());
        CHECK(eigs(0) == doctest::Approx(0.53125).epsilon(1e-12));
        for (int i = 1; i < 16; ++i) {
            CHECK(eigs(i) == doctest::Approx(1.0 / 32.0).epsilon(1e-12));
        }
    }
    SUBCASE("reconstruction and orthonormality") {
        std::mt19937_64 rng(17);
        const Matrix rho = random_density_matrix(16, rng);
        const auto eig = eigendecompose(rho);
        Matrix rebuilt = Matrix::Zero(16, 16);
        Matrix vectors(16, 16);
        for (int i = 0; i < 16; ++i) {
            rebuilt += eig[i].first * eig[i].second.projector();
            vectors.col(i) = eig[i].second.amplitudes();
        }
        CHECK((rebuilt - rho).norm() < 1e-9);
        CHECK((vectors.adjoint() * vectors - Matrix::Identity(16, 16)).cwiseAbs().maxCoeff() <
              1e-9);
        // sorted descending
        for (int i = 1; i < 16; ++i) CHECK(eig[i - 1].first >= eig[i].first);
    }
    SUBCASE("non-Hermitian rejected") {
        Matrix bad = Matrix::Zero(2, 2);
        bad(0, 1) = 1.0;
        CHECK_THROWS_AS(eigendecompose(bad), ContractViolation);
    }
}

TEST_CASE("DensityOperator validation and JSON round trip") {
    SUBCASE("invariants enforced") {
        Matrix not_trace_one = Matrix::Identity(4, 4);
        CHECK_THROWS_AS(DensityOperator{not_trace_one}, ContractViolation);
        Matrix negative = Matrix::Identity(2, 2);
        negative(0, 0) = 1.5;
        negative(1, 1) = -0.5;
        CHECK_THROWS_AS(DensityOperator{negative}, ContractViolation);
    }
    SUBCASE("JSON round trip") {
        std::mt19937_64 rng(23);
        const Matrix rho = random_density_matrix(16, rng);
        const DensityOperator original(rho);
        const auto restored = DensityOperator::from_json(original.to_json());
        CHECK((restored.matrix() - rho).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("malformed JSON rejected") {
        CHECK_THROWS_AS(DensityOperator::from_json("{\"dim\": 2}"), ParseError);
        CHECK_THROWS_AS(DensityOperator::from_json("not json"), ParseError);
    }
}
