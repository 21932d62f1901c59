#include "timebin/qudit.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace timebin {

namespace {

void check_square(const Matrix& m, const char* what) {
    if (m.rows() != m.cols() || m.rows() < 1) {
        throw InvalidDimension(std::string(what) + ": matrix must be square and non-empty");
    }
}

}  // namespace

Ket::Ket(Vector amplitudes) : amps_(std::move(amplitudes)) {
    if (amps_.size() < 1) {
        throw InvalidDimension("Ket: dimension must be positive");
    }
}

Ket Ket::basis(int dim, int k) {
    if (dim < 1 || k < 0 || k >= dim) {
        throw InvalidDimension("Ket::basis: index out of range");
    }
    Vector v = Vector::Zero(dim);
    v(k) = 1.0;
    return Ket(std::move(v));
}

bool Ket::is_normalized(double tol) const {
    return std::abs(amps_.squaredNorm() - 1.0) <= tol;
}

DensityOperator::DensityOperator(Matrix m, const Tolerances& tol) : mat_(std::move(m)) {
    check_square(mat_, "DensityOperator");
    const double herm = (mat_ - mat_.adjoint()).cwiseAbs().maxCoeff();
    if (herm > tol.hermiticity) {
        throw ContractViolation("DensityOperator: matrix not Hermitian (deviation " +
                                std::to_string(herm) + ")");
    }
    if (std::abs(mat_.trace().real() - 1.0) > tol.trace ||
        std::abs(mat_.trace().imag()) > tol.trace) {
        throw ContractViolation("DensityOperator: trace not 1");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(mat_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < tol.eigenvalue_floor) {
        throw ContractViolation("DensityOperator: negative eigenvalue " +
                                std::to_string(es.eigenvalues().minCoeff()));
    }
}

DensityOperator DensityOperator::from_ket(const Ket& psi) {
    if (!psi.is_normalized(1e-9)) {
        throw ContractViolation("DensityOperator::from_ket: ket not normalized");
    }
    return unchecked(psi.projector());
}

DensityOperator DensityOperator::maximally_mixed(int dim) {
    if (dim < 1) {
        throw InvalidDimension("maximally_mixed: dim must be positive");
    }
    return unchecked(Matrix::Identity(dim, dim) / static_cast<double>(dim));
}

DensityOperator DensityOperator::unchecked(Matrix m) {
    DensityOperator rho;
    rho.mat_ = std::move(m);
    return rho;
}

std::string DensityOperator::to_json() const {
    const int n = dim();
    nlohmann::ordered_json j;
    j["dim"] = n;
    auto re = nlohmann::ordered_json::array();
    auto im = nlohmann::ordered_json::array();
    for (int r = 0; r < n; ++r) {
        auto re_row = nlohmann::ordered_json::array();
        auto im_row = nlohmann::ordered_json::array();
        for (int c = 0; c < n; ++c) {
            re_row.push_back(mat_(r, c).real());
            im_row.push_back(mat_(r, c).imag());
        }
        re.push_back(std::move(re_row));
        im.push_back(std::move(im_row));
    }
    j["re"] = std::move(re);
    j["im"] = std::move(im);
    return j.dump(2);
}

DensityOperator DensityOperator::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("density operator JSON: ") + e.what());
    }
    if (!j.contains("dim") || !j.contains("re") || !j.contains("im")) {
        throw ParseError("density operator JSON: missing dim/re/im");
    }
    const int n = j["dim"].get<int>();
    if (n < 1) {
        throw InvalidDimension("density operator JSON: dim must be positive");
    }
    const auto& re = j["re"];
    const auto& im = j["im"];
    if (static_cast<int>(re.size()) != n || static_cast<int>(im.size()) != n) {
        throw ParseError("density operator JSON: matrix shape mismatch");
    }
    Matrix m(n, n);
    for (int r = 0; r < n; ++r) {
        if (static_cast<int>(re[r].size()) != n || static_cast<int>(im[r].size()) != n) {
            throw ParseError("density operator JSON: matrix shape mismatch");
        }
        for (int c = 0; c < n; ++c) {
            m(r, c) = Complex(re[r][c].get<double>(), im[r][c].get<double>());
        }
    }
    return DensityOperator(std::move(m));
}

Ket maximally_entangled(int d, double phi) {
    if (d < 2) {
        throw InvalidDimension("maximally_entangled: d must be at least 2");
    }
    Vector v = Vector::Zero(static_cast<Eigen::Index>(d) * d);
    const double amp = 1.0 / std::sqrt(static_cast<double>(d));
    for (int k = 0; k < d; ++k) {
        v(static_cast<Eigen::Index>(k) * d + k) = amp * std::polar(1.0, k * phi);
    }
    return Ket(std::move(v));
}

Ket tensor(const Ket& a, const Ket& b) {
    const int da = a.dim();
    const int db = b.dim();
    Vector v(static_cast<Eigen::Index>(da) * db);
    for (int i = 0; i < da; ++i) {
        v.segment(static_cast<Eigen::Index>(i) * db, db) = a.amplitude(i) * b.amplitudes();
    }
    return Ket(std::move(v));
}

Matrix tensor(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
            out.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = a(r, c) * b;
        }
    }
    return out;
}

DensityOperator tensor(const DensityOperator& a, const DensityOperator& b) {
    return DensityOperator::unchecked(tensor(a.matrix(), b.matrix()));
}

Matrix partial_trace(const Matrix& rho, Subsystem keep, int d_signal, int d_idler) {
    check_square(rho, "partial_trace");
    if (rho.rows() != static_cast<Eigen::Index>(d_signal) * d_idler) {
        throw InvalidDimension("partial_trace: rho.dim != d_signal * d_idler");
    }
    if (keep == Subsystem::Signal) {
        Matrix out = Matrix::Zero(d_signal, d_signal);
        for (int r = 0; r < d_signal; ++r) {
            for (int c = 0; c < d_signal; ++c) {
                for (int k = 0; k < d_idler; ++k) {
                    out(r, c) += rho(static_cast<Eigen::Index>(r) * d_idler + k,
                                     static_cast<Eigen::Index>(c) * d_idler + k);
                }
            }
        }
        return out;
    }
    Matrix out = Matrix::Zero(d_idler, d_idler);
    for (int r = 0; r < d_idler; ++r) {
        for (int c = 0; c < d_idler; ++c) {
            for (int k = 0; k < d_signal; ++k) {
                out(r, c) += rho(static_cast<Eigen::Index>(k) * d_idler + r,
                                 static_cast<Eigen::Index>(k) * d_idler + c);
            }
        }
    }
    return out;
}

DensityOperator partial_trace(const DensityOperator& rho, Subsystem keep, int d_signal,
                              int d_idler) {
    return DensityOperator::unchecked(partial_trace(rho.matrix(), keep, d_signal, d_idler));
}

namespace {

void require_hermitian(const Matrix& m, double tol) {
    check_square(m, "eigendecompose");
    const double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (herm > tol) {
        throw ContractViolation("eigendecompose: matrix not Hermitian (deviation " +
                                std::to_string(herm) + ")");
    }
}

}  // namespace

std::vector<std::pair<double, Ket>> eigendecompose(const Matrix& rho, const Tolerances& tol) {
    require_hermitian(rho, tol.hermiticity);
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
    const int n = static_cast<int>(rho.rows());
    std::vector<std::pair<double, Ket>> out;
    out.reserve(n);
    // Eigen sorts ascending; emit descending.
    for (int i = n - 1; i >= 0; --i) {
        out.emplace_back(es.eigenvalues()(i), Ket(es.eigenvectors().col(i)));
    }
    return out;
}

Eigen::VectorXd hermitian_eigenvalues(const Matrix& rho, const Tolerances& tol) {
    require_hermitian(rho, tol.hermiticity);
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
    return es.eigenvalues().reverse();
}

DensityOperator werner_state(double p, double phi) {
    if (p < 0.0 || p > 1.0) {
        throw ContractViolation("werner_state: p must lie in [0, 1]");
    }
    const Ket phi_state = maximally_entangled(4, phi);
    Matrix m = p * phi_state.projector() + (1.0 - p) / 16.0 * Matrix::Identity(16, 16);
    return DensityOperator::unchecked(std::move(m));
}

}  // namespace timebin
