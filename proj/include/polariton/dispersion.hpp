// dispersion.hpp: ν_c sweeps, branch tracking, feature detection and the
// Lorentzian transmission proxy.

#pragma once

#include "polariton/bogoliubov.hpp"
#include "polariton/model.hpp"

#include <Eigen/Dense>

#include <optional>
#include <ostream>
#include <span>
#include <vector>

namespace polariton {

inline constexpr double kJumpTolerance = 0.05;      // THz, max step of a tracked column
inline constexpr double kVariationTolerance = 0.02; // THz, below this a column is flat
inline constexpr double kMixingFloor = 0.01;        // median fraction for a coupled column
inline constexpr double kWeakCrossingGap = 0.02;    // THz

struct SweepResult {
    int n_photon = 0;
    std::vector<double> nu_c_values; // THz, ascending
    Eigen::MatrixXd branches;        // [point, column], THz
    // fractions[point] row c: Hopfield fractions of column c over the bare
    // modes (photons first).
    std::vector<Eigen::MatrixXd> fractions;

    int n_points() const noexcept { return static_cast<int>(nu_c_values.size()); }
    int n_branches() const noexcept { return static_cast<int>(branches.cols()); }
    double photon_fraction(int point, int column) const;
    double matter_fraction(int point, int column) const;
};

struct SweepOptions {
    bool parallel = true;
    unsigned threads = 0; // 0: hardware concurrency
};

// Inclusive grid start, start + step, ... up to stop (within step/1e6).
std::vector<double> make_grid(double start, double stop, double step);

// Diagonalizes at each ν_c and matches branches across points: nearest
// predicted frequency (greedy on sorted distance, then pairwise swaps), then
// a relabelling pass that follows the Hopfield fractions through avoided
// crossings narrower than kWeakCrossingGap. Matching only permutes values.
SweepResult sweep(std::span<const PhotonMode> photons, const CouplingSet& c,
                  const std::vector<double>& nu_c_grid, const SweepOptions& options = {});

struct SBranch {
    int column = -1;
    // Column values with each weak crossing replaced by its two-level
    // (uncoupled) continuation.
    std::vector<double> values;
    double asymptote_low = 0.0;  // THz, value at the first grid point
    double asymptote_high = 0.0; // THz, value at the last grid point
    std::optional<double> inflection_nu_c;
};

struct DispersionFeatures {
    int n_coupled_branches = 0;
    int n_residual_lines = 0; // matter-like columns that move with ν_c
    std::vector<int> coupled_columns;
    std::vector<int> residual_columns;
    // Per photon mode: smallest coupled branch above ν_ν minus largest below
    // it, at the grid point nearest ν_c = ν_ν. Empty if ν_ν is off-grid.
    std::vector<std::optional<double>> gap_at_resonance;
    std::optional<SBranch> s_branch;
};

// Requires the sweep to cover ν_c ∈ [0.05, 2.0] THz (RangeError otherwise).
DispersionFeatures detect_features(const SweepResult& s, std::span<const PhotonMode> photons);

enum class WeightMode { photon_fraction, equal };

struct SpectrumConfig {
    std::vector<double> linewidths;     // THz HWHM, one per branch or a single shared value
    std::vector<double> frequency_grid; // THz, ascending
    WeightMode weight_mode = WeightMode::photon_fraction;

    void validate() const;
    double linewidth(int branch) const;
};

// T(ν) = 1 − Σ_k w_k γ_k² / ((ν − ν_k)² + γ_k²), clipped to [0, 1].
std::vector<double> synthesize_spectrum(const EigenSolution& sol, const SpectrumConfig& cfg);

// One transmission row per ν_c point of `grid`.
std::vector<std::vector<double>> spectrum_map(std::span<const PhotonMode> photons, const CouplingSet& c,
                                              const std::vector<double>& nu_c_grid,
                                              const SpectrumConfig& cfg);

// Grid frequencies of strict local minima of T with depth 1 − T ≥ min_depth.
std::vector<double> transmission_minima(const std::vector<double>& transmission,
                                        const std::vector<double>& frequency_grid, double min_depth);

// nu_c_THz,branch,freq_THz,photon_frac_1..N,matter_frac_1..N; branch is 1-based.
void write_branches_csv(std::ostream& out, const SweepResult& s);

} // namespace polariton
