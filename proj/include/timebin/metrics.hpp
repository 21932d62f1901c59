#pragma once

// Figures of merit for the reconstructed two-ququart state: fidelity,
// trace distance, entropies, and the coherent-information key bound.
// Entropies are in bits.

#include <string>

#include "timebin/qudit.hpp"

namespace timebin {

struct MeritReport {
    double fidelity = 0.0;
    double trace_distance = 0.0;
    double linear_entropy = 0.0;
    double von_neumann_entropy = 0.0;
    double conditional_entropy_signal = 0.0;
    double conditional_entropy_idler = 0.0;
    double coherent_information = 0.0;  // -H_c(rho|signal)
    double secure_key_bound_bits = 0.0;
    double optimal_phi = 0.0;

    std::string to_json() const;
    static MeritReport from_json(const std::string& text);
};

// F(rho, sigma) = [Tr sqrt(sqrt(sigma) rho sqrt(sigma))]^2
double fidelity(const DensityOperator& rho, const DensityOperator& sigma);

// D(rho, sigma) = Tr|rho - sigma| / 2
double trace_distance(const DensityOperator& rho, const DensityOperator& sigma);

// 1 - Tr(rho^2)
double linear_entropy(const DensityOperator& rho);

// -Tr(rho log2 rho); eigenvalues in [-1e-9, 0) are clamped to zero.
double von_neumann_entropy(const DensityOperator& rho);

// H(rho) - H(rho^X) for the 4x4 bipartite split.
double conditional_entropy(const DensityOperator& rho, Subsystem given);

struct PhaseFit {
    double phi = 0.0;
    double fidelity = 0.0;
};

// argmax over phi of F(rho, |phi(phi)><phi(phi)|): 256-point grid plus
// golden-section refinement; smallest phi wins ties.
PhaseFit optimize_phase(const DensityOperator& rho);

// (U(phi) (x) I) rho (U(phi) (x) I)^dag with U(phi) = sum_k e^{-ik phi} |k><k|.
DensityOperator display_rotate(const DensityOperator& rho, double phi);

// max(0, -H_c(rho|given)): the Devetak-Winter-achievable rate.
double secure_key_bound(const DensityOperator& rho, Subsystem given);

// Full report against the phase-optimized maximally entangled target.
MeritReport compute_merits(const DensityOperator& rho);
MeritReport compute_merits(const DensityOperator& rho, double phi);

}  // namespace timebin
