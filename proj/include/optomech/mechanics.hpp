#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "optomech/constants.hpp"
#include "optomech/errors.hpp"
#include "optomech/spectrum.hpp"

namespace optomech {

// One vibration mode of the resonator, in the single-mode oscillator picture
// with viscous (velocity-proportional) damping.
struct MechanicalMode {
  double resonance_frequency_hz = 814e3;
  double effective_mass_kg = 190e-9;
  double quality_factor = 1e4;
  std::string label = "mode";
  // FEM predictions are annotations carried alongside the measured values;
  // the simulator never computes with them.
  double fem_frequency_hz = 0.0;
  double fem_mass_kg = 0.0;

  void validate() const {
    if (!(resonance_frequency_hz > 0.0))
      throw DomainError("mode '" + label + "': resonance frequency must be positive");
    if (!(effective_mass_kg > 0.0))
      throw DomainError("mode '" + label + "': effective mass must be positive");
    if (!(quality_factor > 0.0))
      throw DomainError("mode '" + label + "': quality factor must be positive");
  }

  double angular_frequency() const { return 2.0 * M_PI * resonance_frequency_hz; }
  double damping_rate() const { return angular_frequency() / quality_factor; }
  double linewidth_hz() const { return resonance_frequency_hz / quality_factor; }
};

struct Environment {
  double temperature_k = 300.0;

  void validate() const {
    if (!(temperature_k > 0.0)) throw DomainError("environment: temperature must be positive");
  }
};

// Mechanical susceptibility chi(f) = x/F, m/N. Im chi <= 0 for f > 0
// (energy flows into the dissipative mode).
inline std::complex<double> susceptibility(const MechanicalMode& mode, double f_hz) {
  mode.validate();
  if (f_hz < 0.0) throw DomainError("susceptibility: frequency must be >= 0");
  double omega = 2.0 * M_PI * f_hz;
  double omega_m = mode.angular_frequency();
  std::complex<double> det(omega_m * omega_m - omega * omega, mode.damping_rate() * omega);
  return 1.0 / (mode.effective_mass_kg * det);
}

// One-sided Langevin force PSD from the fluctuation-dissipation theorem,
// S_F = 4 k_B T m_eff Omega_m / Q, white in frequency.
inline double thermal_force_psd(const MechanicalMode& mode, const Environment& env) {
  mode.validate();
  env.validate();
  return 4.0 * codata.boltzmann_k * env.temperature_k * mode.effective_mass_kg *
         mode.damping_rate();
}

// Thermal displacement PSD at one frequency, m^2/Hz.
inline double thermal_displacement_psd_at(const MechanicalMode& mode, const Environment& env,
                                          double f_hz) {
  double s_f = thermal_force_psd(mode, env);
  return std::norm(susceptibility(mode, f_hz)) * s_f;
}

inline NoiseSpectrum thermal_displacement_psd(const MechanicalMode& mode, const Environment& env,
                                              const FrequencyGrid& grid) {
  return tabulate(grid.frequencies(), displacement_psd,
                  [&](double f) { return thermal_displacement_psd_at(mode, env, f); });
}

inline NoiseSpectrum thermal_displacement_psd(const MechanicalMode& mode, const Environment& env,
                                              const std::vector<double>& frequencies_hz) {
  return tabulate(frequencies_hz, displacement_psd,
                  [&](double f) { return thermal_displacement_psd_at(mode, env, f); });
}

// Peak thermal ASD at resonance, sqrt(4 k_B T Q / (m_eff Omega_m^3)), m/rtHz.
inline double thermal_peak_asd(const MechanicalMode& mode, const Environment& env) {
  mode.validate();
  env.validate();
  double omega_m = mode.angular_frequency();
  return std::sqrt(4.0 * codata.boltzmann_k * env.temperature_k * mode.quality_factor /
                   (mode.effective_mass_kg * omega_m * omega_m * omega_m));
}

// Equipartition rms displacement sqrt(k_B T / (m_eff Omega_m^2)), m.
inline double rms_displacement(const MechanicalMode& mode, const Environment& env) {
  mode.validate();
  env.validate();
  double omega_m = mode.angular_frequency();
  return std::sqrt(codata.boltzmann_k * env.temperature_k /
                   (mode.effective_mass_kg * omega_m * omega_m));
}

// Steady-state displacement amplitude under a sinusoidal drive, m.
inline double driven_response(const MechanicalMode& mode, double force_amplitude_n,
                              double f_hz) {
  if (force_amplitude_n < 0.0)
    throw DomainError("driven_response: force amplitude must be >= 0");
  return std::abs(susceptibility(mode, f_hz)) * force_amplitude_n;
}

// Frequency grid that resolves a resonance of linewidth gamma_hz: a linear
// window of points_per_linewidth samples per linewidth across
// +/- half_widths linewidths, merged into log-spaced tails covering
// [f_lo, f_hi]. Narrow Lorentzians integrate to sub-0.1% accuracy on it.
inline std::vector<double> resonance_grid(double center_hz, double gamma_hz, double f_lo,
                                          double f_hi, std::size_t points_per_linewidth = 40,
                                          double half_widths = 300.0,
                                          std::size_t n_log_tail = 1500) {
  if (!(center_hz > 0.0 && gamma_hz > 0.0))
    throw DomainError("resonance_grid: center and linewidth must be positive");
  if (!(f_lo > 0.0 && f_lo < f_hi))
    throw DomainError("resonance_grid: need 0 < f_lo < f_hi");
  double win_lo = std::max(f_lo, center_hz - half_widths * gamma_hz);
  double win_hi = std::min(f_hi, center_hz + half_widths * gamma_hz);
  std::vector<double> f;
  double step = gamma_hz / static_cast<double>(points_per_linewidth);
  for (double x = win_lo; x < win_hi; x += step) f.push_back(x);
  f.push_back(win_hi);
  if (f_lo < win_lo) {
    double ratio = std::log(win_lo / f_lo) / static_cast<double>(n_log_tail);
    for (std::size_t i = 0; i < n_log_tail; ++i)
      f.push_back(f_lo * std::exp(ratio * static_cast<double>(i)));
  }
  if (win_hi < f_hi) {
    double ratio = std::log(f_hi / win_hi) / static_cast<double>(n_log_tail);
    for (std::size_t i = 1; i <= n_log_tail; ++i)
      f.push_back(win_hi * std::exp(ratio * static_cast<double>(i)));
  }
  std::sort(f.begin(), f.end());
  f.erase(std::unique(f.begin(), f.end(),
                      [](double a, double b) { return b - a < 1e-9 * std::max(1.0, a); }),
          f.end());
  f.front() = f_lo;
  f.back() = f_hi;
  return f;
}

}  // namespace optomech
