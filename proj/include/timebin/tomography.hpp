#pragma once

// Maximum-likelihood reconstruction of a density operator from
// coincidence counts under a Poisson rate model n = N Tr(rho E).

#include <cstdint>
#include <span>
#include <vector>

#include "timebin/qudit.hpp"

namespace timebin {

struct TomographyCell {
    Matrix op;       // PSD measurement operator, dim x dim
    double count = 0.0;
};

struct TomographyProblem {
    int dim = 16;
    std::vector<TomographyCell> cells;
    double rate_scale = 1.0;      // N: expected frames per setting
    bool fit_rate_scale = true;   // profile N jointly with rho

    double total_counts() const;
};

// rho = T^dag T / Tr(T^dag T) with T lower triangular: dim real diagonal
// entries first, then (re, im) pairs row by row below the diagonal.
// dim^2 parameters in total.
Matrix parameterize(std::span<const double> params, int dim);

// Inverse map for warm starts: Cholesky factors of rho (regularized to
// PSD) flattened in the parameterize ordering.
std::vector<double> deparameterize(const Matrix& rho, int dim);

// sum_cells [c ln(mu) - mu], mu = max(N Tr(rho E), mu_min), constants
// dropped.
double log_likelihood(const Matrix& rho, const TomographyProblem& problem);

inline constexpr double kMuMin = 1e-12;

// Objective used by the optimizer, exposed for gradient verification.
// `params` holds the dim^2 Cholesky parameters, optionally followed by
// log(N) when the rate scale is fitted; otherwise problem.rate_scale
// is used as-is.
struct LikelihoodEval {
    double value = 0.0;
    std::vector<double> gradient;
};

LikelihoodEval evaluate_likelihood(std::span<const double> params,
                                   const TomographyProblem& problem);

struct MleOptions {
    int max_iterations = 5000;
    double tolerance = 1e-9;  // relative likelihood change
    int lbfgs_memory = 10;
    bool warm_start = false;  // seed from linear inversion projected to PSD
};

struct MleResult {
    DensityOperator rho = DensityOperator::maximally_mixed(16);
    double log_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;
    double rate_scale = 1.0;
    bool conditioning_warning = false;
};

MleResult mle_reconstruct(const TomographyProblem& problem, const MleOptions& options = {});

// N-hat = sum(counts) / sum(Tr(rho E)); rho defaults to maximally mixed.
double estimate_rate_scale(const TomographyProblem& problem);
double estimate_rate_scale(const TomographyProblem& problem, const Matrix& rho);

}  // namespace timebin
