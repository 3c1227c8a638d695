// model.hpp: physical parameters and assembly of the multi-mode Hopfield
// Hamiltonian for N photon modes coupled to N degenerate Landau (cyclotron)
// modes.
//
// Conventions
//   * Frequencies on the public surface (PhotonMode, nu_c arguments, reference
//     cyclotron frequencies) are ordinary frequencies in THz.
//   * Rabi frequencies, diamagnetic coefficients and everything inside a
//     QuadraticHamiltonian are angular frequencies in rad/s.
//   * Couplings are real and non-negative. The Rabi matrix is indexed
//     (photon ν, matter μ). The constructors below produce it in the
//     lower-triangular basis where photon mode 1 couples to matter mode 1
//     only; other matter bases (e.g. relabelled modes) are accepted.

#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace polariton {

struct MaterialParams {
    double effective_mass_ratio = 0.07;    // m*/m_e
    double sheet_density = 1.25e16;        // electrons per m² and per quantum well
    int qw_count = 3;
    double background_permittivity = 12.9; // ε_r

    double effective_mass() const noexcept;
    // Throws DomainError when an invariant is violated.
    void validate() const;
};

struct PhotonMode {
    int index = 1;
    double frequency = 0.0; // THz
    // Effective mode length V/F (metres), only required for microscopic
    // couplings. See effective_mode_volume() in overlap.hpp.
    std::optional<double> effective_mode_volume;
    std::string label;

    void validate() const;
};

struct MatterMode {
    int index = 1;
    double frequency = 0.0; // THz
};

struct CouplingSet {
    Eigen::MatrixXd rabi;                    // rad/s, (photon, matter)
    double overlap = 0.0;                    // η_{2,1}
    std::vector<double> reference_cyclotron; // THz, one per photon row

    int n_photon() const noexcept { return static_cast<int>(rabi.rows()); }
    int n_matter() const noexcept { return static_cast<int>(rabi.cols()); }

    // Ω̃_ν = |row ν|, the total coupling of photon mode ν (0-based row).
    double rabi_tilde(int row) const;

    void validate() const;
};

// ν_c = eB / (2π m*), in THz.
double cyclotron_frequency(double field_tesla, const MaterialParams& material);

// Two photon modes sharing the overlap parameter η:
//   Ω_11 = omega_R_11, Ω_21 = Ω̃_2 η, Ω_22 = Ω̃_2 sqrt(1 - η²), Ω_12 = 0.
CouplingSet couplings_from_overlap(double omega_R_11, double omega_R_2_tilde, double eta,
                                   std::array<double, 2> reference_thz);

// One photon mode, one matter mode.
CouplingSet single_mode_coupling(double omega_R, double reference_thz);

// Microscopic vacuum Rabi frequency of `mode` at cyclotron frequency nu_c:
//   sqrt(ω_c n_QW ρ_QW e² / (2 m* ε_0 ε_r ω_ν Ṽ_ν)).
double rabi_microscopic(const PhotonMode& mode, const MaterialParams& material, double nu_c);

// Coupling set from material parameters and mode lengths, referenced at each
// photon's own frequency. One or two photon modes.
CouplingSet couplings_microscopic(std::span<const PhotonMode> photons,
                                  const MaterialParams& material, double eta);

// Couplings follow Ω ∝ sqrt(ω_c). Multiplies row ν by sqrt(nu_c / ref_ν);
// for nu_c > 0 the returned set is referenced at nu_c.
CouplingSet rescale_coupling(const CouplingSet& c, double nu_c);

// h_{νμ} = Σ_γ Ω_{νγ} Ω_{μγ} / ω_c. Under the sqrt(ω_c) scaling this does not
// depend on ω_c, so it is evaluated in the closed form
//   Σ_γ Ω_{νγ} Ω_{μγ} / (2π sqrt(ref_ν ref_μ))
// which stays finite as ν_c → 0. Equals Ω²/ω_c when the set is referenced at ν_c.
Eigen::MatrixXd diamagnetic_matrix(const CouplingSet& c);

// H = Σ_i ω_i c_i†c_i + Σ_{ij} W_ij (c_i + c_i†)(c_j + c_j†).
// Bare modes are ordered photons first, then matter.
struct QuadraticHamiltonian {
    int n_photon = 0;
    Eigen::VectorXd diag_freqs; // rad/s
    Eigen::MatrixXd interaction; // W, rad/s, symmetric

    int n_modes() const noexcept { return static_cast<int>(diag_freqs.size()); }
    void validate() const;
};

// Matter oscillators are clamped to this frequency so the dynamical matrix
// stays regular at ν_c = 0.
inline constexpr double kMinMatterFrequencyTHz = 1e-6;

// Light-matter Hamiltonian at cyclotron frequency nu_c. `c` is the reference-level
// coupling set; light-matter terms are rescaled to nu_c, the diamagnetic term
// uses the ν_c-independent closed form.
QuadraticHamiltonian assemble_hamiltonian(std::span<const PhotonMode> photons, double nu_c,
                                          const CouplingSet& c);

} // namespace polariton
