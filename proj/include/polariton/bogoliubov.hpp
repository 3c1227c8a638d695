// bogoliubov.hpp: Hopfield (Bogoliubov) diagonalization of a quadratic
// bosonic Hamiltonian.
//
// With A = diag(ω) + 2W and B = 2W the Heisenberg equations of
// H = Σ ω c†c + Σ W (c + c†)(c + c†) close on the 2N-vector (c, c†):
//
//     M = [  A   B ]      M (X, Y)ᵀ = ω (X, Y)ᵀ
//         [ -B  -A ]
//
// Each positive-frequency eigenvector defines a polariton operator
//     p_k = Σ_j X_kj c_j − Y_kj c_j†,   [p_k, p_k†] = Σ_j |X_kj|² − |Y_kj|² = 1.

#pragma once

#include "polariton/model.hpp"

#include <Eigen/Dense>

namespace polariton {

inline constexpr double kPairTolerance = 1e-9;       // relative, ±λ pairing
inline constexpr double kImagTolerance = 1e-9;       // |Im λ| / |Re λ|
inline constexpr double kDegeneracyTolerance = 1e-9; // relative

struct EigenSolution {
    int n_photon = 0;
    Eigen::VectorXd frequencies;  // THz, ascending
    Eigen::MatrixXcd hopfield_x;  // row k: branch, column j: bare mode
    Eigen::MatrixXcd hopfield_y;
    Eigen::MatrixXd fractions;    // |X_kj|² − |Y_kj|²

    int n_modes() const noexcept { return static_cast<int>(frequencies.size()); }
    double photon_fraction(int branch) const;
    double matter_fraction(int branch) const;
};

Eigen::MatrixXd build_dynamical_matrix(const QuadraticHamiltonian& h);

// Throws InstabilityError when an eigenfrequency is complex beyond
// kImagTolerance or the form is not positive definite, NumericalError when
// the eigensolver fails or the spectrum is not ±-paired.
//
// Branches closer than kDegeneracyTolerance are re-based onto the bare modes
// that project most strongly into their common eigenspace and ordered by
// photon fraction (descending), then by dominant bare-mode index.
EigenSolution diagonalize(const QuadraticHamiltonian& h);

Eigen::MatrixXd hopfield_fractions(const EigenSolution& sol);

} // namespace polariton
