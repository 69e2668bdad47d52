#pragma once

#include <numbers>

// Physical constants and unit conversions. Lengths inside the lattice code are
// in Angstrom, couplings in Hz (cycles per second), diffusion coefficients in
// nm^2/s, particle radii in nm, relaxation times in hours.
namespace spindiff::units {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline constexpr double mu0_over_4pi = 1e-7;         // T^2 m^3 / J
inline constexpr double hbar = 1.054571817e-34;      // J s
inline constexpr double angstrom = 1e-10;            // m
inline constexpr double angstrom2_to_nm2 = 1e-2;
inline constexpr double seconds_per_hour = 3600.0;

/// Reference gyromagnetic ratio used for reduced units, rad s^-1 T^-1.
inline constexpr double gamma_reference = 1e6;
/// Reference lattice constant used for reduced units, Angstrom.
inline constexpr double lattice_reference = 1.0;

inline constexpr double gamma_si29 = -53.190e6;
inline constexpr double lattice_constant_si = 5.431;

/// FWHM of a Gaussian with unit second moment: 2 sqrt(2 ln 2).
inline constexpr double gaussian_fwhm_per_sigma = 2.3548200450309493;
/// Peak height of a unit-area Gaussian times its FWHM: 2 sqrt(ln 2 / pi).
inline constexpr double gaussian_peak_times_fwhm = 0.93943727869965132;

}  // namespace spindiff::units
