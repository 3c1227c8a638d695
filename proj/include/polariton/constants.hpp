// constants.hpp: CODATA constants and the THz <-> rad/s boundary conversion.

#pragma once

#include <numbers>

namespace polariton {

// CODATA 2018 values, SI units.
struct PhysicalConstants {
    static constexpr double elementary_charge = 1.602176634e-19;    // C
    static constexpr double electron_mass = 9.1093837015e-31;       // kg
    static constexpr double vacuum_permittivity = 8.8541878128e-12; // F/m
    static constexpr double reduced_planck = 1.054571817e-34;       // J s
};

inline constexpr double kHzPerTHz = 1e12;

// All public I/O is in ordinary frequency (THz); all internal arithmetic is in
// angular frequency (rad/s). These two functions are the only place the 2π
// factor appears.
constexpr double to_angular(double thz) noexcept {
    return 2.0 * std::numbers::pi * kHzPerTHz * thz;
}

constexpr double to_thz(double rad_per_s) noexcept {
    return rad_per_s / (2.0 * std::numbers::pi * kHzPerTHz);
}

} // namespace polariton
