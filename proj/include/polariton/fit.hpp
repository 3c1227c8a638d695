// fit.hpp: estimate (Ω_11, Ω̃_2, η) for two photon modes from polariton peak
// positions recorded at several cyclotron frequencies.

#pragma once

#include "polariton/model.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace polariton {

struct PeakRecord {
    double nu_c = 0.0;              // THz
    std::vector<double> peak_freqs; // THz
};

struct PeakDataset {
    std::vector<PeakRecord> records;
    std::string source_label;

    // DataError on an empty dataset, empty records or non-positive values.
    void validate() const;
};

// CSV "nu_c_THz,peak1_THz,peak2_THz,..." with blank cells for missing peaks.
// Missing file: DataError. Malformed content: FormatError naming the line.
PeakDataset read_peaks_csv(const std::filesystem::path& path);

struct FitParams {
    double omega_R_11 = 0.0;      // rad/s
    double omega_R_2_tilde = 0.0; // rad/s
    double eta = 0.0;
};

// Bounds on the normalized parameters Ω_11/ω_1, Ω̃_2/ω_2 and η.
struct FitBounds {
    double ratio_11_min = 0.0, ratio_11_max = 1.0;
    double ratio_2_min = 0.0, ratio_2_max = 1.0;
    double eta_min = 0.0, eta_max = 1.0;

    void validate() const;
};

struct FitConfig {
    bool fit_eta = false;
    double eta = 0.0; // used as is when fit_eta is false
    FitBounds bounds;
    int restarts = 8;
    std::uint64_t seed = 1;
    int max_iterations = 4000;
    double tolerance = 1e-6; // simplex size relative to |x|
    bool parallel = true;

    void validate() const;
};

struct FitResult {
    double omega_R_11 = 0.0;      // rad/s
    double omega_R_2_tilde = 0.0; // rad/s
    double eta = 0.0;
    double ratio_11 = 0.0; // Ω_11/ω_1
    double ratio_2 = 0.0;  // Ω̃_2/ω_2
    double residual_rms = 0.0; // THz
    long n_evaluations = 0;
    bool converged = false;
    int best_restart = -1;

    FitParams params() const { return {omega_R_11, omega_R_2_tilde, eta}; }
};

// Couplings for two photon modes, each row referenced at its own photon frequency.
CouplingSet fit_couplings(const FitParams& p, std::span<const PhotonMode> photons);

// rms over all assigned (peak, branch) pairs; each record's peaks are matched
// one-to-one to model branches minimizing the squared error.
double residual(const FitParams& p, const PeakDataset& data, std::span<const PhotonMode> photons);

struct RecordResidual {
    double nu_c = 0.0;
    int n_peaks = 0;
    double rms = 0.0; // THz
};

std::vector<RecordResidual> record_residuals(const FitParams& p, const PeakDataset& data,
                                             std::span<const PhotonMode> photons);

// Requires >= 3 records with ν_c on both sides of every photon frequency
// (DataError otherwise). Nelder–Mead from `restarts` seeded random starts;
// ConvergenceError if none converges.
FitResult fit(const PeakDataset& data, std::span<const PhotonMode> photons, const FitConfig& config);

} // namespace polariton
