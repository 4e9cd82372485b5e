#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "optomech/constants.hpp"
#include "optomech/errors.hpp"
#include "optomech/mechanics.hpp"
#include "optomech/spectrum.hpp"

namespace optomech {

// Cold-damping loop: a viscous force -g gamma m_eff d/dt(x + x_n) fed back
// from the measurement, whose imprecision noise x_n (white, PSD S_imp) is
// re-injected by the actuator. S_imp = 0 is the idealized noiseless loop.
struct FeedbackController {
  double gain = 0.0;
  double imprecision_psd_m2_hz = 0.0;
  bool enabled = true;

  void validate() const {
    if (!(gain >= 0.0)) throw DomainError("feedback: gain must be >= 0 (positive damping only)");
    if (!(imprecision_psd_m2_hz >= 0.0))
      throw DomainError("feedback: imprecision PSD must be >= 0");
  }
  double effective_gain() const { return enabled ? gain : 0.0; }
};

// True motion of the resonator under feedback:
//   S_x = [S_F/m^2 + g^2 gamma^2 W^2 S_imp] / [(Wm^2-W^2)^2 + (1+g)^2 gamma^2 W^2]
inline double closed_loop_psd_at(const MechanicalMode& mode, const Environment& env,
                                 const FeedbackController& fb, double f_hz) {
  double g = fb.effective_gain();
  double omega = 2.0 * M_PI * f_hz;
  double omega_m = mode.angular_frequency();
  double gamma = mode.damping_rate();
  double m = mode.effective_mass_kg;
  double det = omega_m * omega_m - omega * omega;
  double den = det * det + (1.0 + g) * (1.0 + g) * gamma * gamma * omega * omega;
  double num = thermal_force_psd(mode, env) / (m * m) +
               g * g * gamma * gamma * omega * omega * fb.imprecision_psd_m2_hz;
  return num / den;
}

// What the detector records (x + x_n): the imprecision term enters through
// the full open-loop response, so at high gain the in-loop spectrum dips
// below S_imp at resonance (noise squashing) while the true motion does not.
inline double in_loop_psd_at(const MechanicalMode& mode, const Environment& env,
                             const FeedbackController& fb, double f_hz) {
  double g = fb.effective_gain();
  double omega = 2.0 * M_PI * f_hz;
  double omega_m = mode.angular_frequency();
  double gamma = mode.damping_rate();
  double m = mode.effective_mass_kg;
  double det = omega_m * omega_m - omega * omega;
  double den = det * det + (1.0 + g) * (1.0 + g) * gamma * gamma * omega * omega;
  double num = thermal_force_psd(mode, env) / (m * m) +
               (det * det + gamma * gamma * omega * omega) * fb.imprecision_psd_m2_hz;
  return num / den;
}

struct ClosedLoopSpectra {
  NoiseSpectrum true_motion;
  NoiseSpectrum in_loop;
};

inline ClosedLoopSpectra closed_loop_psd(const MechanicalMode& mode, const Environment& env,
                                         const FeedbackController& fb,
                                         const std::vector<double>& frequencies_hz) {
  mode.validate();
  env.validate();
  fb.validate();
  return {tabulate(frequencies_hz, displacement_psd,
                   [&](double f) { return closed_loop_psd_at(mode, env, fb, f); }),
          tabulate(frequencies_hz, displacement_psd,
                   [&](double f) { return in_loop_psd_at(mode, env, fb, f); })};
}

inline ClosedLoopSpectra closed_loop_psd(const MechanicalMode& mode, const Environment& env,
                                         const FeedbackController& fb,
                                         const FrequencyGrid& grid) {
  return closed_loop_psd(mode, env, fb, grid.frequencies());
}

// Grid dense enough to integrate the widened closed-loop resonance.
inline std::vector<double> cooling_grid(const MechanicalMode& mode, double gain, double f_lo,
                                        double f_hi) {
  double widened = (1.0 + gain) * mode.linewidth_hz();
  return resonance_grid(mode.resonance_frequency_hz, widened, f_lo, f_hi);
}

struct EffectiveTemperature {
  double kelvin = 0.0;
  double truncation_error_k = 0.0;  // estimated variance missed outside the span
  bool span_warning = false;        // span narrower than [f_m/100, 100 f_m]
};

// Equipartition temperature from a true-motion spectrum:
// T_eff = m_eff Wm^2 <x^2> / k_B, <x^2> the integral of the PSD over its span.
// Tails outside the span are estimated from the plateau and the f^-4 rolloff.
inline EffectiveTemperature effective_temperature(const NoiseSpectrum& true_motion,
                                                  const MechanicalMode& mode) {
  if (true_motion.unit() != displacement_psd)
    throw UnitError("effective_temperature: spectrum must be a displacement PSD");
  double f_lo = true_motion.f_min();
  double f_hi = true_motion.f_max();
  double variance = integrate_psd(true_motion, f_lo, f_hi);
  double omega_m = mode.angular_frequency();
  double scale = mode.effective_mass_kg * omega_m * omega_m / codata.boltzmann_k;

  EffectiveTemperature result;
  result.kelvin = scale * variance;
  double missed = true_motion.values().front() * f_lo +
                  true_motion.values().back() * f_hi / 3.0;
  result.truncation_error_k = scale * missed;
  double f_m = mode.resonance_frequency_hz;
  result.span_warning = f_lo > f_m / 100.0 || f_hi < 100.0 * f_m;
  return result;
}

// Closed-form equipartition temperature of the loop: the thermal part cools
// as T/(1+g) while the fed-back imprecision heats as g^2/(1+g), so T_eff has
// an interior minimum in g whenever S_imp > 0.
inline double analytic_effective_temperature(const MechanicalMode& mode, const Environment& env,
                                             const FeedbackController& fb) {
  mode.validate();
  env.validate();
  fb.validate();
  double g = fb.effective_gain();
  double omega_m = mode.angular_frequency();
  double gamma = mode.damping_rate();
  double heating = mode.effective_mass_kg * omega_m * omega_m * gamma * g * g *
                   fb.imprecision_psd_m2_hz / (4.0 * codata.boltzmann_k * (1.0 + g));
  return env.temperature_k / (1.0 + g) + heating;
}

// Gain minimizing the analytic T_eff, by golden-section search on log(g).
inline double optimal_gain(const MechanicalMode& mode, const Environment& env,
                           double imprecision_psd_m2_hz, double g_lo = 1e-3,
                           double g_hi = 1e8) {
  if (!(imprecision_psd_m2_hz > 0.0))
    throw DomainError("optimal_gain: needs S_imp > 0 (noiseless loop has no optimum)");
  if (!(g_lo > 0.0 && g_lo < g_hi)) throw DomainError("optimal_gain: need 0 < g_lo < g_hi");
  auto t_eff = [&](double log_g) {
    FeedbackController fb{std::exp(log_g), imprecision_psd_m2_hz, true};
    return analytic_effective_temperature(mode, env, fb);
  };
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(g_lo), b = std::log(g_hi);
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = t_eff(c), fd = t_eff(d);
  while (b - a > 1e-10) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = t_eff(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = t_eff(d);
    }
  }
  return std::exp(0.5 * (a + b));
}

struct CoolingResult {
  double gain = 0.0;
  double effective_temperature_k = 0.0;
  double effective_linewidth_hz = 0.0;  // (1+g) f_m / Q
  double area_m2 = 0.0;                 // variance of the true motion over the grid span
  NoiseSpectrum true_motion;
  NoiseSpectrum in_loop;
};

// One closed-loop evaluation per gain; each result carries spectra on a grid
// refined for its own widened linewidth within [grid.f_min, grid.f_max].
inline std::vector<CoolingResult> gain_sweep(const MechanicalMode& mode, const Environment& env,
                                             const FeedbackController& loop_template,
                                             const std::vector<double>& gains,
                                             const FrequencyGrid& grid) {
  for (std::size_t i = 1; i < gains.size(); ++i)
    if (gains[i] < gains[i - 1]) throw DomainError("gain_sweep: gains must be sorted ascending");
  grid.validate();
  std::vector<CoolingResult> results;
  results.reserve(gains.size());
  for (double g : gains) {
    FeedbackController fb = loop_template;
    fb.gain = g;
    fb.enabled = true;
    auto freqs = cooling_grid(mode, g, grid.f_min_hz, grid.f_max_hz);
    auto spectra = closed_loop_psd(mode, env, fb, freqs);
    auto t_eff = effective_temperature(spectra.true_motion, mode);
    CoolingResult r{g,
                    t_eff.kelvin,
                    (1.0 + g) * mode.linewidth_hz(),
                    integrate_psd(spectra.true_motion, freqs.front(), freqs.back()),
                    std::move(spectra.true_motion),
                    std::move(spectra.in_loop)};
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace optomech
