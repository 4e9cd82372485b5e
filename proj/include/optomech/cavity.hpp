#pragma once

#include <cmath>
#include <complex>
#include <optional>

#include "optomech/constants.hpp"
#include "optomech/errors.hpp"
#include "optomech/spectrum.hpp"

namespace optomech {

// Single-ended Fabry-Perot cavity: partially transmitting input coupler,
// fully reflecting back mirror, all round-trip power losses lumped into one
// coefficient (back-mirror residual transmission included).
struct OpticalCavity {
  double length_m = 2.4e-3;
  double input_transmission = 70e-6;   // power fraction T
  double round_trip_loss = 140e-6;     // power fraction L
  double wavelength_m = 1.064e-6;
  double waist_m = 60e-6;

  void validate() const {
    if (!(length_m > 0.0)) throw DomainError("cavity: length must be positive");
    if (!(input_transmission > 0.0 && input_transmission < 1.0))
      throw DomainError("cavity: input_transmission must be in (0, 1)");
    if (!(round_trip_loss >= 0.0 && round_trip_loss < 1.0))
      throw DomainError("cavity: round_trip_loss must be in [0, 1)");
    if (input_transmission + round_trip_loss >= 1.0)
      throw DomainError("cavity: total loss T + L must be < 1");
    if (!(wavelength_m > 0.0)) throw DomainError("cavity: wavelength must be positive");
    if (!(waist_m > 0.0)) throw DomainError("cavity: waist must be positive");
  }
};

struct LaserSource {
  double power_w = 1.5e-3;
  double wavelength_m = 1.064e-6;
  double modulation_index = 0.6574848;   // default reproduces the shot-noise penalty F(m) = 3.59
  double sideband_frequency_hz = 12e6;
  std::optional<NoiseSpectrum> frequency_noise;  // Hz^2/Hz envelope

  void validate() const {
    if (power_w < 0.0) throw DomainError("laser: power must be >= 0");
    if (!(wavelength_m > 0.0)) throw DomainError("laser: wavelength must be positive");
    if (!(modulation_index >= 0.0 && modulation_index < 2.4))
      throw DomainError("laser: modulation_index must be in [0, 2.4)");
    if (!(sideband_frequency_hz > 0.0))
      throw DomainError("laser: sideband frequency must be positive");
    if (frequency_noise && frequency_noise->unit() != frequency_psd)
      throw UnitError("laser: frequency noise envelope must be tagged Hz^2/Hz");
  }

  double carrier_frequency_hz() const { return codata.light_speed_c / wavelength_m; }
};

struct DetectionChain {
  double mode_matching = 0.91;         // power mode matching to the cavity
  double detection_efficiency = 0.93;  // photodetection efficiency

  void validate() const {
    if (!(mode_matching > 0.0 && mode_matching <= 1.0))
      throw DomainError("detection: mode_matching must be in (0, 1]");
    if (!(detection_efficiency > 0.0 && detection_efficiency <= 1.0))
      throw DomainError("detection: detection_efficiency must be in (0, 1]");
  }
};

inline double finesse(const OpticalCavity& cavity) {
  cavity.validate();
  double total = cavity.input_transmission + cavity.round_trip_loss;
  if (total <= 0.0) throw DomainError("finesse: T + L must be positive");
  return 2.0 * M_PI / total;
}

inline double free_spectral_range(const OpticalCavity& cavity) {
  cavity.validate();
  return codata.light_speed_c / (2.0 * cavity.length_m);
}

// Half width at half maximum of the cavity resonance.
inline double cavity_bandwidth(const OpticalCavity& cavity) {
  return free_spectral_range(cavity) / (2.0 * finesse(cavity));
}

// Amplitude reflection of the cavity for a carrier detuned from resonance.
// Airy response with input amplitude reflectivity sqrt(1-T) and round-trip
// amplitude attenuation sqrt(1-L); |r|^2 <= 1 everywhere.
inline std::complex<double> reflection_coefficient(const OpticalCavity& cavity,
                                                   double detuning_hz) {
  double fsr = free_spectral_range(cavity);
  if (!(std::abs(detuning_hz) < 0.5 * fsr))
    throw DomainError("reflection_coefficient: detuning outside principal FSR");
  double r1 = std::sqrt(1.0 - cavity.input_transmission);
  double a = std::sqrt(1.0 - cavity.round_trip_loss);
  std::complex<double> phase = std::polar(1.0, 2.0 * M_PI * detuning_hz / fsr);
  return (a * phase - r1) / (1.0 - r1 * a * phase);
}

namespace detail {

// d r / d detuning, from differentiating the Airy response.
inline std::complex<double> reflection_derivative(const OpticalCavity& cavity,
                                                  double detuning_hz) {
  double fsr = free_spectral_range(cavity);
  double r1 = std::sqrt(1.0 - cavity.input_transmission);
  double a = std::sqrt(1.0 - cavity.round_trip_loss);
  std::complex<double> phase = std::polar(1.0, 2.0 * M_PI * detuning_hz / fsr);
  std::complex<double> den = 1.0 - r1 * a * phase;
  // dr/dphi = i a phase (1 - r1^2) / den^2, with phi the round-trip phase
  std::complex<double> drdphi =
      std::complex<double>(0.0, 1.0) * a * phase * (1.0 - r1 * r1) / (den * den);
  return drdphi * (2.0 * M_PI / fsr);
}

inline double bessel_j0(double x) { return std::cyl_bessel_j(0.0, x); }
inline double bessel_j1(double x) { return std::cyl_bessel_j(1.0, x); }

}  // namespace detail

// PDH shot-noise penalty F(m) = 1 / (J0(m) J1(m)): the carrier-sideband
// beat strength relative to the full incident photon budget.
inline double bessel_penalty(double modulation_index) {
  if (!(modulation_index > 0.0 && modulation_index < 2.4))
    throw DomainError("bessel_penalty: modulation index must be in (0, 2.4)");
  double product = detail::bessel_j0(modulation_index) * detail::bessel_j1(modulation_index);
  if (product <= 0.0)
    throw DomainError("bessel_penalty: J0*J1 vanished at the requested index");
  return 1.0 / product;
}

// Demodulated PDH error signal, dimensionless (normalized to incident power).
// Antisymmetric in detuning and linear near resonance; its zero crossing is
// the lock point.
inline double pdh_error_signal(const OpticalCavity& cavity, const LaserSource& laser,
                               double detuning_hz) {
  cavity.validate();
  laser.validate();
  double fsr = free_spectral_range(cavity);
  double omega_sb = laser.sideband_frequency_hz;
  if (!(omega_sb > cavity_bandwidth(cavity)))
    throw DomainError("pdh_error_signal: sidebands must be outside the cavity bandwidth");
  if (!(std::abs(detuning_hz) + omega_sb < 0.5 * fsr))
    throw DomainError("pdh_error_signal: detuning too close to the next resonance");
  double j0 = detail::bessel_j0(laser.modulation_index);
  double j1 = detail::bessel_j1(laser.modulation_index);
  if (std::abs(j0 * j1) < 1e-12)
    throw DomainError("pdh_error_signal: modulation index gives no carrier-sideband beat");
  std::complex<double> rc = reflection_coefficient(cavity, detuning_hz);
  std::complex<double> rp = reflection_coefficient(cavity, detuning_hz + omega_sb);
  std::complex<double> rm = reflection_coefficient(cavity, detuning_hz - omega_sb);
  return 2.0 * j0 * j1 * std::imag(rc * std::conj(rp) - std::conj(rc) * rm);
}

// Slope of the PDH error signal at zero detuning, per Hz. This is the
// displacement calibration factor of the locked readout.
inline double pdh_error_slope(const OpticalCavity& cavity, const LaserSource& laser) {
  cavity.validate();
  laser.validate();
  double omega_sb = laser.sideband_frequency_hz;
  if (!(omega_sb > cavity_bandwidth(cavity)))
    throw DomainError("pdh_error_slope: sidebands must be outside the cavity bandwidth");
  double j0 = detail::bessel_j0(laser.modulation_index);
  double j1 = detail::bessel_j1(laser.modulation_index);
  std::complex<double> r0 = reflection_coefficient(cavity, 0.0);
  std::complex<double> rsb = reflection_coefficient(cavity, omega_sb);
  std::complex<double> d0 = detail::reflection_derivative(cavity, 0.0);
  std::complex<double> dsb = detail::reflection_derivative(cavity, omega_sb);
  // d/d(detuning) of Im[r(d) r*(d+O) - r*(d) r(d-O)] at d = 0, using
  // r(-d) = conj(r(d)) for the Airy response.
  std::complex<double> term = 2.0 * std::complex<double>(0.0, std::imag(d0)) * std::conj(rsb) +
                              2.0 * std::real(r0) * std::conj(dsb);
  return 2.0 * j0 * j1 * std::imag(term);
}

// Shot-noise-limited displacement sensitivity of the PDH readout, m/rtHz.
inline double shot_noise_floor(const OpticalCavity& cavity, const LaserSource& laser,
                               const DetectionChain& chain, double f_hz) {
  cavity.validate();
  laser.validate();
  chain.validate();
  if (f_hz < 0.0) throw DomainError("shot_noise_floor: frequency must be >= 0");
  double flux = photon_flux(laser.power_w, laser.wavelength_m);
  if (flux <= 0.0)
    throw DomainError("shot_noise_floor: zero incident power gives no shot-noise-limited readout");
  double fin = finesse(cavity);
  double dnu = cavity_bandwidth(cavity);
  double t = cavity.input_transmission;
  double total_loss = t + cavity.round_trip_loss;
  double penalty = bessel_penalty(laser.modulation_index);
  double eta_term = std::sqrt(chain.mode_matching * chain.detection_efficiency);
  double rolloff = std::sqrt(1.0 + (f_hz / dnu) * (f_hz / dnu));
  return cavity.wavelength_m / (16.0 * fin * std::sqrt(flux)) * penalty / eta_term *
         (total_loss / t) * rolloff;
}

// Shot-noise floor as a displacement PSD spectrum on a grid.
inline NoiseSpectrum shot_noise_psd(const OpticalCavity& cavity, const LaserSource& laser,
                                    const DetectionChain& chain,
                                    const std::vector<double>& frequencies_hz) {
  return tabulate(frequencies_hz, displacement_psd, [&](double f) {
    double asd = shot_noise_floor(cavity, laser, chain, f);
    return asd * asd;
  });
}

// Displacement equivalent to a laser frequency excursion delta_nu at lock:
// an intracavity length change and a fractional frequency change are
// interchangeable, x = length * delta_nu / nu0.
inline double frequency_modulation_calibration(const OpticalCavity& cavity,
                                               double carrier_frequency_hz,
                                               double delta_nu_hz) {
  cavity.validate();
  if (!(carrier_frequency_hz > 0.0))
    throw DomainError("frequency_modulation_calibration: carrier frequency must be positive");
  if (!(std::abs(delta_nu_hz) < 1e-3 * carrier_frequency_hz))
    throw DomainError("frequency_modulation_calibration: modulation must be << carrier");
  return cavity.length_m * delta_nu_hz / carrier_frequency_hz;
}

// Converts a laser frequency-noise PSD (Hz^2/Hz) into the equivalent
// displacement-noise PSD (m^2/Hz) of the locked readout.
inline NoiseSpectrum frequency_noise_to_displacement(const OpticalCavity& cavity,
                                                     double carrier_frequency_hz,
                                                     const NoiseSpectrum& s_nu) {
  cavity.validate();
  if (s_nu.unit() != frequency_psd)
    throw UnitError("frequency_noise_to_displacement: input must be tagged Hz^2/Hz");
  if (!(carrier_frequency_hz > 0.0))
    throw DomainError("frequency_noise_to_displacement: carrier frequency must be positive");
  double factor = cavity.length_m / carrier_frequency_hz;
  std::vector<double> v(s_nu.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = s_nu.values()[i] * factor * factor;
  return s_nu.with_values(std::move(v), displacement_psd);
}

}  // namespace optomech
