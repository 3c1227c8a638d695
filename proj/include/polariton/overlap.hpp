// overlap.hpp: in-plane mode-overlap integrals over the quantum-well domain.
//
//   F_{νμ} = ∫_S f_ν* f_μ d²r        (midpoint rule on a uniform grid, µm²)
//   η_{νμ} = F_{νμ} / sqrt(F_νν F_μμ)
//
// Grids are stored row-major: value (ix, iy) lives at ix * ny + iy.

#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace polariton {

struct FieldProfile {
    int nx = 0;
    int ny = 0;
    double dx = 0.0; // µm
    double dy = 0.0; // µm
    std::vector<std::complex<double>> values;

    std::complex<double> at(int ix, int iy) const { return values[static_cast<std::size_t>(ix) * ny + iy]; }
    void validate() const;
};

struct DomainMask {
    int nx = 0;
    int ny = 0;
    double dx = 0.0; // µm; only checked against profiles when > 0
    double dy = 0.0;
    std::vector<std::uint8_t> inside;

    bool contains(int ix, int iy) const { return inside[static_cast<std::size_t>(ix) * ny + iy] != 0; }
    double area() const; // µm², requires dx, dy > 0
    void validate() const;
};

std::complex<double> overlap_integral(const FieldProfile& f, const FieldProfile& g, const DomainMask& s);

// |η| ∈ [0, 1]. Throws DegenerateProfileError if either self-overlap vanishes.
double overlap_parameter(const FieldProfile& f, const FieldProfile& g, const DomainMask& s);

// Complex η, for diagnostics (its phase is not used by the coupling model).
std::complex<double> overlap_parameter_complex(const FieldProfile& f, const FieldProfile& g,
                                               const DomainMask& s);

// Ṽ = V / F_νν with F converted to m²; the result is a length in metres.
double effective_mode_volume(const FieldProfile& f, const DomainMask& s, double physical_volume_m3);

// ---------------------------------------------------------------------------
// Analytic fixtures resembling the two lowest resonator modes: an LC-like mode
// with a single central lobe on a weak positive background, and a dipolar-like
// mode with the same central lobe plus four opposite-sign corner lobes.

enum class ProfileKind { lc, dipolar };

struct FixtureGeometry {
    int nx = 128;
    int ny = 128;
    double extent_x_um = 128.0;
    double extent_y_um = 128.0;
    double central_width_um = 5.0;       // Gaussian σ of the central lobe
    double background_width_um = 32.0;   // σ of the LC background
    double background_amplitude = 0.05;  // relative to the central lobe
    double corner_width_um = 12.8;       // σ of each corner lobe
    double corner_offset_um = 32.0;      // |x| = |y| of the corner lobe centres
    // Corner amplitude of the dipolar profile. When empty it is calibrated so
    // that the full-grid overlap with the LC profile vanishes.
    std::optional<double> corner_amplitude;

    void validate() const;
};

FieldProfile synthetic_profile(ProfileKind kind, const FixtureGeometry& geometry);

// Corner amplitude a for which Σ lc · (central − a · corners) = 0 on the grid.
double calibrate_corner_amplitude(const FixtureGeometry& geometry);

DomainMask full_mask(const FieldProfile& like);
// Cells whose centre lies in |x| < half_x, |y| < half_y (grid centred on 0).
DomainMask central_mask(const FieldProfile& like, double half_x_um, double half_y_um);

// Text format: header line "nx ny dx dy" (µm), then nx*ny row-major entries,
// "re,im" for profiles and 0/1 for masks. Errors name the offending line.
FieldProfile read_profile(const std::filesystem::path& path);
DomainMask read_mask(const std::filesystem::path& path);
void write_profile(const std::filesystem::path& path, const FieldProfile& f);
void write_mask(const std::filesystem::path& path, const DomainMask& m);

} // namespace polariton
