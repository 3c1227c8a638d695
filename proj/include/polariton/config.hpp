// config.hpp: run configuration in a flat INI-like format.
//
//   # comment
//   [section]
//   key = value            lists are comma-separated
//
// Sections and keys (units in the key names):
//   [photons]     frequencies_THz, labels
//   [coupling]    omega_R_11_over_omega1, omega_R_2_tilde_over_omega2, eta
//   [microscopic] mode_lengths_m, eta              (instead of [coupling])
//   [material]    effective_mass_ratio, sheet_density_m2, qw_count, background_permittivity
//   [sweep]       nu_c_start_THz, nu_c_stop_THz, nu_c_step_THz
//                 or B_start_T, B_stop_T, B_step_T
//   [spectrum]    linewidths_THz, nu_start_THz, nu_stop_THz, nu_step_THz, weight
//   [fit]         fit_eta, eta, restarts, seed, max_iterations, tolerance,
//                 omega_R_11_over_omega1_min/_max, omega_R_2_tilde_over_omega2_min/_max,
//                 eta_min/_max
//   [overlap]     physical_volumes_m3, profiles, mask
//
// Every schema violation raises ConfigError anchored at "path:line".

#pragma once

#include "polariton/dispersion.hpp"
#include "polariton/fit.hpp"
#include "polariton/model.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace polariton {

struct IniEntry {
    std::string value;
    int line = 0;
};

struct IniSection {
    int line = 0;
    std::map<std::string, IniEntry> entries;
};

struct IniDocument {
    std::string name; // file path used in messages
    std::map<std::string, IniSection> sections;

    std::string where(int line) const { return name + ":" + std::to_string(line); }
};

IniDocument parse_ini(const std::string& text, const std::string& name);

struct CouplingSpec {
    enum class Kind { normalized, microscopic } kind = Kind::normalized;
    double ratio_11 = 0.0; // Ω_11/ω_1
    double ratio_2 = 0.0;  // Ω̃_2/ω_2
    double eta = 0.0;
    std::vector<double> mode_lengths_m;
};

struct SweepSpec {
    bool in_tesla = false;
    double start = 0.0, stop = 0.0, step = 0.0; // THz or T
};

struct SpectrumSpec {
    std::vector<double> linewidths;
    double nu_start = 0.0, nu_stop = 0.0, nu_step = 0.0; // THz
    WeightMode weight_mode = WeightMode::photon_fraction;

    SpectrumConfig config() const;
};

struct OverlapSpec {
    std::vector<double> physical_volumes_m3;
    std::vector<std::filesystem::path> profiles; // resolved against the config directory
    std::optional<std::filesystem::path> mask;
};

struct RunConfig {
    std::string source;
    std::vector<PhotonMode> photons;
    MaterialParams material;
    CouplingSpec coupling;
    std::optional<SweepSpec> sweep;
    std::optional<SpectrumSpec> spectrum;
    std::optional<FitConfig> fit;
    std::optional<OverlapSpec> overlap;

    // Reference-level couplings in rad/s.
    CouplingSet couplings() const;
    // ν_c grid in THz; B grids are converted with cyclotron_frequency.
    std::vector<double> nu_c_grid() const;
};

RunConfig parse_config(const std::string& text, const std::string& name,
                       const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

} // namespace polariton
