#include "timebin/metrics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace timebin {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_same_dim(const DensityOperator& a, const DensityOperator& b) {
    if (a.dim() != b.dim()) {
        throw InvalidDimension("metric: dimension mismatch");
    }
}

Matrix matrix_sqrt(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    Matrix out = Matrix::Zero(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double lambda = std::max(es.eigenvalues()(i), 0.0);
        out += std::sqrt(lambda) * es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
    }
    return out;
}

double entropy_bits(const Eigen::VectorXd& eigenvalues) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
        const double lambda = std::max(eigenvalues(i), 0.0);
        if (lambda > 0.0) {
            h -= lambda * std::log2(lambda);
        }
    }
    return h;
}

}  // namespace

double fidelity(const DensityOperator& rho, const DensityOperator& sigma) {
    check_same_dim(rho, sigma);
    const Matrix sqrt_sigma = matrix_sqrt(sigma.matrix());
    const Matrix inner = sqrt_sigma * rho.matrix() * sqrt_sigma;
    Eigen::SelfAdjointEigenSolver<Matrix> es(inner, Eigen::EigenvaluesOnly);
    double tr = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        tr += std::sqrt(std::max(es.eigenvalues()(i), 0.0));
    }
    return std::clamp(tr * tr, 0.0, 1.0);
}

double trace_distance(const DensityOperator& rho, const DensityOperator& sigma) {
    check_same_dim(rho, sigma);
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho.matrix() - sigma.matrix(),
                                             Eigen::EigenvaluesOnly);
    return std::clamp(0.5 * es.eigenvalues().cwiseAbs().sum(), 0.0, 1.0);
}

double linear_entropy(const DensityOperator& rho) {
    return 1.0 - (rho.matrix() * rho.matrix()).trace().real();
}

double von_neumann_entropy(const DensityOperator& rho) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho.matrix(), Eigen::EigenvaluesOnly);
    return entropy_bits(es.eigenvalues());
}

double conditional_entropy(const DensityOperator& rho, Subsystem given) {
    if (rho.dim() != 16) {
        throw InvalidDimension("conditional_entropy: expected a 16-dim bipartite state");
    }
    const Matrix marginal = partial_trace(rho.matrix(), given, 4, 4);
    Eigen::SelfAdjointEigenSolver<Matrix> es(marginal, Eigen::EigenvaluesOnly);
    return von_neumann_entropy(rho) - entropy_bits(es.eigenvalues());
}

namespace {

double target_fidelity(const DensityOperator& rho, double phi) {
    // <phi(phi)| rho |phi(phi)> = (1/4) sum_{jk} e^{i(k-j)phi} rho[4j+j, 4k+k]
    Complex acc{0.0, 0.0};
    for (int j = 0; j < 4; ++j) {
        for (int k = 0; k < 4; ++k) {
            acc += std::polar(1.0, (k - j) * phi) * rho.matrix()(5 * j, 5 * k);
        }
    }
    return acc.real() / 4.0;
}

}  // namespace

PhaseFit optimize_phase(const DensityOperator& rho) {
    if (rho.dim() != 16) {
        throw InvalidDimension("optimize_phase: expected a 16-dim state");
    }
    constexpr int kGrid = 256;
    double best_phi = 0.0;
    double best_f = -1.0;
    for (int i = 0; i < kGrid; ++i) {
        const double phi = 2.0 * kPi * i / kGrid;
        const double f = target_fidelity(rho, phi);
        if (f > best_f + 1e-15) {
            best_f = f;
            best_phi = phi;
        }
    }
    // Golden-section refinement around the winning grid point.
    const double step = 2.0 * kPi / kGrid;
    double lo = best_phi - step;
    double hi = best_phi + step;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = hi - gr * (hi - lo);
    double b = lo + gr * (hi - lo);
    double fa = target_fidelity(rho, a);
    double fb = target_fidelity(rho, b);
    for (int it = 0; it < 60; ++it) {
        if (fa > fb) {
            hi = b;
            b = a;
            fb = fa;
            a = hi - gr * (hi - lo);
            fa = target_fidelity(rho, a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + gr * (hi - lo);
            fb = target_fidelity(rho, b);
        }
    }
    double phi = (fa > fb) ? a : b;
    double f = std::max(fa, fb);
    // Keep the refined point only on a strict improvement so that flat
    // landscapes fall back to the smallest grid phi.
    if (f <= best_f + 1e-12) {
        phi = best_phi;
        f = best_f;
    }
    phi = std::fmod(phi, 2.0 * kPi);
    if (phi < 0.0) phi += 2.0 * kPi;
    return PhaseFit{phi, std::clamp(f, 0.0, 1.0)};
}

DensityOperator display_rotate(const DensityOperator& rho, double phi) {
    if (rho.dim() != 16) {
        throw InvalidDimension("display_rotate: expected a 16-dim state");
    }
    Vector u(4);
    for (int k = 0; k < 4; ++k) {
        u(k) = std::polar(1.0, -k * phi);
    }
    Matrix rotated = rho.matrix();
    for (int j = 0; j < 4; ++j) {
        for (int k = 0; k < 4; ++k) {
            rotated.block(4 * j, 4 * k, 4, 4) *= u(j) * std::conj(u(k));
        }
    }
    return DensityOperator::unchecked(std::move(rotated));
}

double secure_key_bound(const DensityOperator& rho, Subsystem given) {
    return std::max(0.0, -conditional_entropy(rho, given));
}

MeritReport compute_merits(const DensityOperator& rho) {
    return compute_merits(rho, optimize_phase(rho).phi);
}

MeritReport compute_merits(const DensityOperator& rho, double phi) {
    MeritReport r;
    r.optimal_phi = phi;
    const DensityOperator target = DensityOperator::from_ket(maximally_entangled(4, phi));
    r.fidelity = fidelity(rho, target);
    r.trace_distance = trace_distance(rho, target);
    r.linear_entropy = linear_entropy(rho);
    r.von_neumann_entropy = von_neumann_entropy(rho);
    r.conditional_entropy_signal = conditional_entropy(rho, Subsystem::Signal);
    r.conditional_entropy_idler = conditional_entropy(rho, Subsystem::Idler);
    r.coherent_information = -r.conditional_entropy_signal;
    r.secure_key_bound_bits = secure_key_bound(rho, Subsystem::Signal);
    return r;
}

std::string MeritReport::to_json() const {
    nlohmann::ordered_json j;
    j["fidelity"] = fidelity;
    j["trace_distance"] = trace_distance;
    j["linear_entropy"] = linear_entropy;
    j["von_neumann_entropy"] = von_neumann_entropy;
    j["conditional_entropy_signal"] = conditional_entropy_signal;
    j["conditional_entropy_idler"] = conditional_entropy_idler;
    j["coherent_information"] = coherent_information;
    j["secure_key_bound_bits"] = secure_key_bound_bits;
    j["optimal_phi"] = optimal_phi;
    return j.dump(2);
}

MeritReport MeritReport::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("merit report JSON: ") + e.what());
    }
    MeritReport r;
    try {
        r.fidelity = j.at("fidelity").get<double>();
        r.trace_distance = j.at("trace_distance").get<double>();
        r.linear_entropy = j.at("linear_entropy").get<double>();
        r.von_neumann_entropy = j.at("von_neumann_entropy").get<double>();
        r.conditional_entropy_signal = j.at("conditional_entropy_signal").get<double>();
        r.conditional_entropy_idler = j.at("conditional_entropy_idler").get<double>();
        r.coherent_information = j.at("coherent_information").get<double>();
        r.secure_key_bound_bits = j.at("secure_key_bound_bits").get<double>();
        r.optimal_phi = j.at("optimal_phi").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("merit report JSON: ") + e.what());
    }
    return r;
}

}  // namespace timebin
