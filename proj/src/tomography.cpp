#include "timebin/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace timebin {

namespace {

double trace_product(const Matrix& rho, const Matrix& op) {
    // Tr(rho op) for Hermitian factors.
    return rho.transpose().cwiseProduct(op).sum().real();
}

Matrix build_T(std::span<const double> params, int dim) {
    Matrix T = Matrix::Zero(dim, dim);
    for (int j = 0; j < dim; ++j) {
        T(j, j) = params[static_cast<std::size_t>(j)];
    }
    std::size_t idx = static_cast<std::size_t>(dim);
    for (int j = 1; j < dim; ++j) {
        for (int k = 0; k < j; ++k) {
            T(j, k) = Complex(params[idx], params[idx + 1]);
            idx += 2;
        }
    }
    return T;
}

}  // namespace

double TomographyProblem::total_counts() const {
    return std::accumulate(cells.begin(), cells.end(), 0.0,
                           [](double acc, const TomographyCell& c) { return acc + c.count; });
}

Matrix parameterize(std::span<const double> params, int dim) {
    if (dim < 1 || params.size() != static_cast<std::size_t>(dim) * dim) {
        throw InvalidDimension("parameterize: expected dim^2 parameters");
    }
    const Matrix T = build_T(params, dim);
    Matrix S = T.adjoint() * T;
    const double tr = S.trace().real();
    if (!(tr > 0.0) || !std::isfinite(tr)) {
        throw DegenerateParameterization("parameterize: T^dag T has non-positive trace");
    }
    return S / tr;
}

std::vector<double> deparameterize(const Matrix& rho, int dim) {
    if (rho.rows() != dim || rho.cols() != dim) {
        throw InvalidDimension("deparameterize: shape mismatch");
    }
    // Clamp to strictly PSD so the factorization exists.
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
    const double floor = std::max(1e-12, 1e-10 * es.eigenvalues().maxCoeff());
    Matrix psd = Matrix::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        psd += std::max(es.eigenvalues()(i), floor) * es.eigenvectors().col(i) *
               es.eigenvectors().col(i).adjoint();
    }
    // A lower-triangular T with T^dag T = psd comes from the Cholesky
    // factor of the index-reversed matrix.
    Matrix flipped = psd.colwise().reverse().rowwise().reverse().eval();
    Eigen::LLT<Matrix> llt(flipped);
    if (llt.info() != Eigen::Success) {
        throw ContractViolation("deparameterize: factorization failed");
    }
    Matrix upper = llt.matrixL().adjoint();
    Matrix T = upper.colwise().reverse().rowwise().reverse().eval();

    // Make the diagonal real positive: scaling row j by a unit phase
    // (T -> D T, D diagonal unitary) leaves T^dag T unchanged.
    for (int j = 0; j < dim; ++j) {
        const Complex d = T(j, j);
        if (std::abs(d) > 0.0) {
            T.row(j) *= std::conj(d) / std::abs(d);
        }
    }

    std::vector<double> params(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int j = 0; j < dim; ++j) {
        params[static_cast<std::size_t>(j)] = T(j, j).real();
    }
    std::size_t idx = static_cast<std::size_t>(dim);
    for (int j = 1; j < dim; ++j) {
        for (int k = 0; k < j; ++k) {
            params[idx] = T(j, k).real();
            params[idx + 1] = T(j, k).imag();
            idx += 2;
        }
    }
    return params;
}

double log_likelihood(const Matrix& rho, const TomographyProblem& problem) {
    double acc = 0.0;
    for (const auto& cell : problem.cells) {
        const double mu = std::max(problem.rate_scale * trace_product(rho, cell.op), kMuMin);
        acc += cell.count * std::log(mu) - mu;
    }
    return acc;
}

LikelihoodEval evaluate_likelihood(std::span<const double> params,
                                   const TomographyProblem& problem) {
    const int dim = problem.dim;
    const auto n_state = static_cast<std::size_t>(dim) * dim;
    const bool fit_rate = params.size() == n_state + 1;
    if (!fit_rate && params.size() != n_state) {
        throw InvalidDimension("evaluate_likelihood: bad parameter count");
    }
    const double rate = fit_rate ? std::exp(params[n_state]) : problem.rate_scale;

    const Matrix T = build_T(params.first(n_state), dim);
    Matrix S = T.adjoint() * T;
    const double tr = S.trace().real();
    if (!(tr > 0.0) || !std::isfinite(tr)) {
        throw DegenerateParameterization("evaluate_likelihood: degenerate parameters");
    }
    const Matrix rho = S / tr;

    double value = 0.0;
    double rate_grad = 0.0;
    Matrix G = Matrix::Zero(dim, dim);  // dL/drho
    for (const auto& cell : problem.cells) {
        const double mu_raw = rate * trace_product(rho, cell.op);
        if (mu_raw > kMuMin) {
            value += cell.count * std::log(mu_raw) - mu_raw;
            const double coeff = (cell.count / mu_raw - 1.0) * rate;
            G += coeff * cell.op;
            rate_grad += cell.count - mu_raw;
        } else {
            value += cell.count * std::log(kMuMin) - kMuMin;
        }
    }

    const double gr = trace_product(rho, G);
    const Matrix K = (G - gr * Matrix::Identity(dim, dim)) / tr;
    const Matrix TK = T * K;

    LikelihoodEval eval;
    eval.value = value;
    eval.gradient.assign(params.size(), 0.0);
    for (int j = 0; j < dim; ++j) {
        eval.gradient[static_cast<std::size_t>(j)] = 2.0 * TK(j, j).real();
    }
    std::size_t idx = static_cast<std::size_t>(dim);
    for (int j = 1; j < dim; ++j) {
        for (int k = 0; k < j; ++k) {
            eval.gradient[idx] = 2.0 * TK(j, k).real();
            eval.gradient[idx + 1] = 2.0 * TK(j, k).imag();
            idx += 2;
        }
    }
    if (fit_rate) {
        eval.gradient[n_state] = rate_grad;
    }
    return eval;
}

double estimate_rate_scale(const TomographyProblem& problem) {
    return estimate_rate_scale(
        problem, Matrix::Identity(problem.dim, problem.dim) / static_cast<double>(problem.dim));
}

double estimate_rate_scale(const TomographyProblem& problem, const Matrix& rho) {
    if (problem.cells.empty()) {
        throw InsufficientData("estimate_rate_scale: no cells");
    }
    const double total = problem.total_counts();
    if (!(total > 0.0)) {
        throw InsufficientData("estimate_rate_scale: zero total counts");
    }
    double expected = 0.0;
    for (const auto& cell : problem.cells) {
        expected += std::max(0.0, trace_product(rho, cell.op));
    }
    if (!(expected > 0.0)) {
        throw InsufficientData("estimate_rate_scale: operators have zero total weight");
    }
    return total / expected;
}

namespace {

// Hermitian least-squares seed: minimizes sum (Tr(rho E) - c/N)^2 over
// Hermitian rho, then projects onto PSD trace-1.
Matrix linear_inversion_seed(const TomographyProblem& problem, double rate) {
    const int dim = problem.dim;
    const int n_real = dim * dim;  // dim diagonal + 2 per off-diagonal pair
    const auto rows = static_cast<Eigen::Index>(problem.cells.size());
    Eigen::MatrixXd A(rows, n_real);
    Eigen::VectorXd b(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& cell = problem.cells[static_cast<std::size_t>(r)];
        b(r) = cell.count / rate;
        int col = 0;
        for (int i = 0; i < dim; ++i) {
            A(r, col++) = cell.op(i, i).real();
        }
        for (int i = 0; i < dim; ++i) {
            for (int j = i + 1; j < dim; ++j) {
                A(r, col++) = 2.0 * cell.op(j, i).real();
                A(r, col++) = -2.0 * cell.op(j, i).imag();
            }
        }
    }
    // Small ridge keeps under-determined directions harmless.
    Eigen::MatrixXd lhs = A.transpose() * A + 1e-9 * Eigen::MatrixXd::Identity(n_real, n_real);
    Eigen::VectorXd x = lhs.ldlt().solve(A.transpose() * b);
    Matrix rho = Matrix::Zero(dim, dim);
    int col = 0;
    for (int i = 0; i < dim; ++i) {
        rho(i, i) = x(col++);
    }
    for (int i = 0; i < dim; ++i) {
        for (int j = i + 1; j < dim; ++j) {
            rho(i, j) = Complex(x(col), x(col + 1));
            rho(j, i) = std::conj(rho(i, j));
            col += 2;
        }
    }
    // Project to PSD and renormalize; blend with the maximally mixed
    // state to stay in the interior.
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
    Matrix psd = Matrix::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        psd += std::max(es.eigenvalues()(i), 0.0) * es.eigenvectors().col(i) *
               es.eigenvectors().col(i).adjoint();
    }
    const double tr = psd.trace().real();
    if (!(tr > 0.0)) {
        return Matrix::Identity(dim, dim) / static_cast<double>(dim);
    }
    psd /= tr;
    return 0.95 * psd + 0.05 * Matrix::Identity(dim, dim) / static_cast<double>(dim);
}

}  // namespace

MleResult mle_reconstruct(const TomographyProblem& problem, const MleOptions& options) {
    const int dim = problem.dim;
    const auto n_state = static_cast<std::size_t>(dim) * dim;
    if (problem.cells.empty()) {
        throw InsufficientData("mle_reconstruct: no cells");
    }

    MleResult result;
    const double total = problem.total_counts();
    double max_cell = 0.0;
    for (const auto& c : problem.cells) max_cell = std::max(max_cell, c.count);
    result.conditioning_warning = total > 0.0 && max_cell == total;

    double rate0 = problem.rate_scale;
    if (problem.fit_rate_scale && total > 0.0) {
        rate0 = estimate_rate_scale(problem);
    }

    const std::size_t n_params = n_state + (problem.fit_rate_scale ? 1 : 0);
    std::vector<double> x(n_params, 0.0);
    if (options.warm_start && total > 0.0) {
        const auto seed = deparameterize(linear_inversion_seed(problem, rate0), dim);
        std::copy(seed.begin(), seed.end(), x.begin());
    } else {
        for (int j = 0; j < dim; ++j) x[static_cast<std::size_t>(j)] = 1.0;
    }
    if (problem.fit_rate_scale) {
        x[n_state] = std::log(std::max(rate0, kMuMin));
    }

    TomographyProblem working = problem;
    working.rate_scale = rate0;  // used when the rate is held fixed

    auto objective = [&](const std::vector<double>& p) {
        return evaluate_likelihood(std::span<const double>(p.data(), p.size()), working);
    };

    // L-BFGS (two-loop recursion) with Armijo backtracking on -L.
    LikelihoodEval eval = objective(x);
    std::deque<std::vector<double>> s_hist;
    std::deque<std::vector<double>> y_hist;
    std::deque<double> rho_hist;

    const std::size_t n = n_params;
    std::vector<double> grad_f(n);  // gradient of -L
    auto refresh_grad = [&]() {
        for (std::size_t i = 0; i < n; ++i) grad_f[i] = -eval.gradient[i];
    };
    refresh_grad();

    int iter = 0;
    int small_steps = 0;
    bool converged = false;
    for (; iter < options.max_iterations; ++iter) {
        // Two-loop recursion.
        std::vector<double> q = grad_f;
        std::vector<double> alpha(s_hist.size());
        for (std::size_t h = s_hist.size(); h-- > 0;) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += s_hist[h][i] * q[i];
            alpha[h] = rho_hist[h] * dot;
            for (std::size_t i = 0; i < n; ++i) q[i] -= alpha[h] * y_hist[h][i];
        }
        double gamma = 1.0;
        if (!s_hist.empty()) {
            double sy = 0.0;
            double yy = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                sy += s_hist.back()[i] * y_hist.back()[i];
                yy += y_hist.back()[i] * y_hist.back()[i];
            }
            if (yy > 0.0) gamma = sy / yy;
        }
        for (std::size_t i = 0; i < n; ++i) q[i] *= gamma;
        for (std::size_t h = 0; h < s_hist.size(); ++h) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += y_hist[h][i] * q[i];
            const double beta = rho_hist[h] * dot;
            for (std::size_t i = 0; i < n; ++i) q[i] += s_hist[h][i] * (alpha[h] - beta);
        }
        std::vector<double> dir(n);
        for (std::size_t i = 0; i < n; ++i) dir[i] = -q[i];

        double slope = 0.0;
        for (std::size_t i = 0; i < n; ++i) slope += grad_f[i] * dir[i];
        if (!(slope < 0.0)) {
            // Not a descent direction; fall back to steepest descent.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            slope = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                dir[i] = -grad_f[i];
                slope -= grad_f[i] * grad_f[i];
            }
            if (!(slope < 0.0)) {
                converged = true;  // zero gradient
                break;
            }
        }

        const double f0 = -eval.value;
        double step = 1.0;
        std::vector<double> x_new(n);
        LikelihoodEval eval_new;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * dir[i];
            try {
                eval_new = objective(x_new);
            } catch (const DegenerateParameterization&) {
                step *= 0.5;
                continue;
            }
            if (-eval_new.value <= f0 + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            break;  // line search failed; keep the best iterate
        }

        std::vector<double> s(n);
        std::vector<double> y(n);
        double sy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = x_new[i] - x[i];
            y[i] = -eval_new.gradient[i] - grad_f[i];
            sy += s[i] * y[i];
        }
        // The likelihood can crawl through long plateaus from a cold
        // start, so a single small step is not proof of convergence.
        const double delta = std::abs(eval_new.value - eval.value);
        if (delta <= options.tolerance * (std::abs(eval.value) + 1.0)) {
            ++small_steps;
        } else {
            small_steps = 0;
        }
        const bool done = small_steps >= 5;

        x = std::move(x_new);
        eval = eval_new;
        refresh_grad();
        if (sy > 1e-12) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (s_hist.size() > static_cast<std::size_t>(options.lbfgs_memory)) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        if (done) {
            ++iter;
            converged = true;
            break;
        }
    }

    result.rho = DensityOperator::unchecked(
        parameterize(std::span<const double>(x.data(), n_state), dim));
    result.rate_scale =
        problem.fit_rate_scale ? std::exp(x[n_state]) : problem.rate_scale;
    result.log_likelihood = eval.value;
    result.iterations = iter;
    result.converged = converged;
    return result;
}

}  // namespace timebin
