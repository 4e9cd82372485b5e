#pragma once

#include "optomech/errors.hpp"

namespace optomech {

// CODATA 2018 values. k_B and h are exact by definition of the SI.
struct PhysicalConstants {
  double boltzmann_k = 1.380649e-23;     // J/K
  double planck_h = 6.62607015e-34;      // J*s
  double light_speed_c = 299792458.0;    // m/s
};

inline constexpr PhysicalConstants codata{};

// Mean photon arrival rate of a beam of the given power, photons/s.
inline double photon_flux(double power_w, double wavelength_m) {
  if (wavelength_m <= 0.0)
    throw DomainError("photon_flux: wavelength must be positive");
  if (power_w < 0.0)
    throw DomainError("photon_flux: power must be non-negative");
  return power_w * wavelength_m / (codata.planck_h * codata.light_speed_c);
}

}  // namespace optomech
