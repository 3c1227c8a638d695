#include "polariton/model.hpp"

#include "polariton/constants.hpp"
#include "polariton/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace polariton {

namespace {

bool finite_matrix(const Eigen::MatrixXd& m) {
    return m.allFinite();
}

} // namespace

double MaterialParams::effective_mass() const noexcept {
    return effective_mass_ratio * PhysicalConstants::electron_mass;
}

void MaterialParams::validate() const {
    if (!(effective_mass_ratio > 0.0))
        throw DomainError("effective_mass_ratio must be > 0");
    if (!(sheet_density >= 0.0))
        throw DomainError("sheet_density must be >= 0");
    if (qw_count < 1)
        throw DomainError("qw_count must be >= 1");
    if (!(background_permittivity >= 1.0))
        throw DomainError("background_permittivity must be >= 1");
}

void PhotonMode::validate() const {
    if (!(frequency > 0.0) || !std::isfinite(frequency))
        throw DomainError("photon mode " + std::to_string(index) + ": frequency must be > 0");
    if (effective_mode_volume && !(*effective_mode_volume > 0.0))
        throw DomainError("photon mode " + std::to_string(index) +
                          ": effective mode volume must be > 0");
}

double CouplingSet::rabi_tilde(int row) const {
    if (row < 0 || row >= n_photon())
        throw StructuralError("rabi_tilde: row out of range");
    return rabi.row(row).norm();
}

void CouplingSet::validate() const {
    if (rabi.rows() == 0 || rabi.cols() == 0)
        throw StructuralError("coupling set is empty");
    if (!finite_matrix(rabi))
        throw DomainError("coupling set contains non-finite Rabi frequencies");
    if ((rabi.array() < 0.0).any())
        throw DomainError("Rabi frequencies must be non-negative");
    if (!(overlap >= 0.0 && overlap <= 1.0))
        throw DomainError("overlap parameter must lie in [0, 1]");
    if (reference_cyclotron.size() != static_cast<std::size_t>(rabi.rows()))
        throw StructuralError("one reference cyclotron frequency per photon row is required");
    for (double r : reference_cyclotron)
        if (!(r > 0.0))
            throw DomainError("reference cyclotron frequencies must be > 0");
}

double cyclotron_frequency(double field_tesla, const MaterialParams& material) {
    if (!(field_tesla >= 0.0))
        throw DomainError("magnetic field must be >= 0 T");
    material.validate();
    const double nu_hz = PhysicalConstants::elementary_charge * field_tesla /
                         (2.0 * std::numbers::pi * material.effective_mass());
    return nu_hz / kHzPerTHz;
}

CouplingSet couplings_from_overlap(double omega_R_11, double omega_R_2_tilde, double eta,
                                   std::array<double, 2> reference_thz) {
    if (!(eta >= 0.0 && eta <= 1.0))
        throw DomainError("overlap parameter eta must lie in [0, 1]");
    if (!(omega_R_11 >= 0.0) || !(omega_R_2_tilde >= 0.0))
        throw DomainError("Rabi frequencies must be >= 0");

    CouplingSet c;
    c.rabi = Eigen::MatrixXd::Zero(2, 2);
    c.rabi(0, 0) = omega_R_11;
    c.rabi(1, 0) = omega_R_2_tilde * eta;
    c.rabi(1, 1) = omega_R_2_tilde * std::sqrt(1.0 - eta * eta);
    c.overlap = eta;
    c.reference_cyclotron = {reference_thz[0], reference_thz[1]};
    c.validate();
    return c;
}

CouplingSet single_mode_coupling(double omega_R, double reference_thz) {
    if (!(omega_R >= 0.0))
        throw DomainError("Rabi frequency must be >= 0");
    CouplingSet c;
    c.rabi = Eigen::MatrixXd::Constant(1, 1, omega_R);
    c.overlap = 0.0;
    c.reference_cyclotron = {reference_thz};
    c.validate();
    return c;
}

double rabi_microscopic(const PhotonMode& mode, const MaterialParams& material, double nu_c) {
    if (!(nu_c > 0.0))
        throw DomainError("rabi_microscopic requires nu_c > 0");
    mode.validate();
    material.validate();
    if (!mode.effective_mode_volume)
        throw DomainError("photon mode " + std::to_string(mode.index) +
                          " has no effective mode volume");

    const double e = PhysicalConstants::elementary_charge;
    const double omega_c = to_angular(nu_c);
    const double omega_nu = to_angular(mode.frequency);
    const double numerator = omega_c * material.qw_count * material.sheet_density * e * e;
    const double denominator = 2.0 * material.effective_mass() * PhysicalConstants::vacuum_permittivity *
                               material.background_permittivity * omega_nu * *mode.effective_mode_volume;
    return std::sqrt(numerator / denominator);
}

CouplingSet couplings_microscopic(std::span<const PhotonMode> photons,
                                  const MaterialParams& material, double eta) {
    if (photons.size() == 1) {
        const double nu = photons[0].frequency;
        return single_mode_coupling(rabi_microscopic(photons[0], material, nu), nu);
    }
    if (photons.size() != 2)
        throw StructuralError("microscopic couplings support one or two photon modes");
    const double nu1 = photons[0].frequency;
    const double nu2 = photons[1].frequency;
    return couplings_from_overlap(rabi_microscopic(photons[0], material, nu1),
                                  rabi_microscopic(photons[1], material, nu2), eta, {nu1, nu2});
}

CouplingSet rescale_coupling(const CouplingSet& c, double nu_c) {
    c.validate();
    if (!(nu_c >= 0.0))
        throw DomainError("nu_c must be >= 0");
    CouplingSet out = c;
    for (int r = 0; r < c.n_photon(); ++r) {
        out.rabi.row(r) *= std::sqrt(nu_c / c.reference_cyclotron[r]);
        if (nu_c > 0.0)
            out.reference_cyclotron[r] = nu_c;
    }
    return out;
}

Eigen::MatrixXd diamagnetic_matrix(const CouplingSet& c) {
    c.validate();
    const int n = c.n_photon();
    Eigen::MatrixXd h(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            // In the lower-triangular basis the full dot product is the sum
            // over γ ≤ min(ν, μ); in any other matter basis it is the same
            // Gram matrix.
            const double num = c.rabi.row(i).dot(c.rabi.row(j));
            const double den = to_angular(std::sqrt(c.reference_cyclotron[i] * c.reference_cyclotron[j]));
            h(i, j) = h(j, i) = num / den;
        }
    }
    return h;
}

void QuadraticHamiltonian::validate() const {
    const int n = n_modes();
    if (n == 0)
        throw StructuralError("empty Hamiltonian");
    if (interaction.rows() != n || interaction.cols() != n)
        throw StructuralError("interaction matrix does not match number of modes");
    if (n_photon < 0 || n_photon > n)
        throw StructuralError("invalid photon mode count");
    if (!diag_freqs.allFinite() || !interaction.allFinite())
        throw DomainError("Hamiltonian contains non-finite coefficients");
    if ((interaction - interaction.transpose()).cwiseAbs().maxCoeff() >
        1e-12 * std::max(1.0, interaction.cwiseAbs().maxCoeff()))
        throw StructuralError("interaction matrix is not symmetric");
}

QuadraticHamiltonian assemble_hamiltonian(std::span<const PhotonMode> photons, double nu_c,
                                          const CouplingSet& c) {
    c.validate();
    if (!(nu_c >= 0.0))
        throw DomainError("nu_c must be >= 0");
    const int n_ph = static_cast<int>(photons.size());
    if (n_ph == 0 || c.n_photon() != n_ph) {
        std::ostringstream msg;
        msg << "coupling set has " << c.n_photon() << " photon rows but " << n_ph
            << " photon modes were given";
        throw StructuralError(msg.str());
    }
    if (c.n_matter() != n_ph)
        throw StructuralError("number of matter modes must equal number of photon modes");
    for (const auto& p : photons)
        p.validate();

    std::vector<MatterMode> matter(static_cast<std::size_t>(n_ph));
    for (int m = 0; m < n_ph; ++m)
        matter[m] = {m + 1, std::max(nu_c, kMinMatterFrequencyTHz)};

    const int n = 2 * n_ph;
    QuadraticHamiltonian h;
    h.n_photon = n_ph;
    h.diag_freqs.resize(n);
    for (int i = 0; i < n_ph; ++i) {
        h.diag_freqs(i) = to_angular(photons[i].frequency);
        h.diag_freqs(n_ph + i) = to_angular(matter[i].frequency);
    }

    const CouplingSet scaled = rescale_coupling(c, nu_c);
    h.interaction = Eigen::MatrixXd::Zero(n, n);
    // ħΩ (b + b†)(a + a†) appears once in H; W holds both (ν, μ) orderings.
    h.interaction.topRightCorner(n_ph, n_ph) = 0.5 * scaled.rabi;
    h.interaction.bottomLeftCorner(n_ph, n_ph) = 0.5 * scaled.rabi.transpose();
    h.interaction.topLeftCorner(n_ph, n_ph) = diamagnetic_matrix(c);
    h.validate();
    return h;
}

} // namespace polariton
