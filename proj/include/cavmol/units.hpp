#pragma once
// Unit system shared by every physics module.
//
// Internal energy unit: angular frequency in rad/s (hbar = 1).
// Internal length unit: Bohr radius a0.
// Conversions to and from laboratory units live only in this header.

#include <numbers>

namespace cavmol::units {

// CODATA 2018
inline constexpr double hbar = 1.054571817e-34;             // J s
inline constexpr double bohr_radius = 5.29177210903e-11;    // m
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double speed_of_light = 299792458.0;       // m/s

inline constexpr double cs133_mass_u = 132.905451961;
inline constexpr double cs133_mass = cs133_mass_u * atomic_mass_unit;  // kg

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Ordinary frequency in MHz -> internal angular frequency.
constexpr double from_mhz(double mhz) { return two_pi * 1.0e6 * mhz; }
/// Internal angular frequency -> ordinary frequency in MHz.
constexpr double to_mhz(double omega) { return omega / (two_pi * 1.0e6); }

constexpr double from_khz(double khz) { return two_pi * 1.0e3 * khz; }
constexpr double to_khz(double omega) { return omega / (two_pi * 1.0e3); }

constexpr double from_ghz(double ghz) { return two_pi * 1.0e9 * ghz; }

constexpr double bohr_to_cm(double r) { return r * bohr_radius * 100.0; }
constexpr double bohr2_to_cm2(double area) {
  return area * (bohr_radius * 100.0) * (bohr_radius * 100.0);
}
constexpr double metres_to_bohr(double x) { return x / bohr_radius; }

/// Momentum hbar*P for P in a0^-1, expressed in units of 1e-22 g cm/s.
constexpr double momentum_to_1e22_gcms(double p_per_bohr) {
  // hbar [J s] = 1e7 erg s; 1 a0^-1 = 1 / (a0 * 100) cm^-1
  return hbar * 1.0e7 * p_per_bohr / (bohr_radius * 100.0) * 1.0e22;
}

}  // namespace cavmol::units
