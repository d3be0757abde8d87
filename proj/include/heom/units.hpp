#pragma once

#include <numbers>

namespace heom {

// Unit conventions used throughout: energies in cm^-1, times in fs,
// temperatures in K, hbar = 1. An energy E cm^-1 generates phase at
// E * cm1_to_rad_per_fs rad/fs; beta = 1/(k_B T) is in (cm^-1)^-1 so that
// products like beta*gamma and beta*lambda are dimensionless.
struct UnitSystem {
  // Boltzmann constant, cm^-1 / K (CODATA k_B/(h c)).
  double k_B = 0.6950348004;
  // 2*pi*c with c in cm/fs: converts a wavenumber to angular frequency.
  double cm1_to_rad_per_fs = 2.0 * std::numbers::pi * 2.99792458e10 * 1e-15;

  constexpr double beta(double temperature_K) const {
    return 1.0 / (k_B * temperature_K);
  }
  constexpr double to_angular(double energy_cm1) const {
    return energy_cm1 * cm1_to_rad_per_fs;
  }
};

// Single source of truth consumed by every module.
inline constexpr UnitSystem units{};

}  // namespace heom
