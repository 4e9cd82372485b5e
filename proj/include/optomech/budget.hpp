#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "optomech/cavity.hpp"
#include "optomech/errors.hpp"
#include "optomech/mechanics.hpp"
#include "optomech/spectrum.hpp"

namespace optomech {

// Residual-gas index noise: an envelope measured at some reference pressure,
// scaled down to the operating pressure by a power law on the PSD (exponent 2
// by default, i.e. amplitude linear in pressure; the scaling law is a modeling
// choice, override via config).
struct GasNoiseModel {
  NoiseSpectrum reference_envelope;
  double reference_pressure_mbar = 1000.0;
  double operating_pressure_mbar = 1e-2;
  double pressure_exponent = 2.0;

  void validate() const {
    if (!(reference_pressure_mbar > 0.0) || !(operating_pressure_mbar > 0.0))
      throw DomainError("gas model: pressures must be positive");
    if (reference_envelope.unit() != displacement_psd)
      throw UnitError("gas model: envelope must be a displacement PSD (m^2/Hz)");
  }
};

namespace detail {

// Resample a PSD onto new frequencies by interpolating in log-log space;
// noise envelopes span decades, where linear interpolation badly overshoots.
// Falls back to linear interpolation around zero values or a zero frequency.
inline NoiseSpectrum resample_log_log(const NoiseSpectrum& s, const std::vector<double>& freqs) {
  const auto& f = s.frequencies();
  const auto& v = s.values();
  std::vector<double> out(freqs.size());
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    double x = freqs[i];
    if (x < f.front() || x > f.back())
      throw DomainError("resample: frequency " + std::to_string(x) +
                        " Hz outside envelope span");
    auto it = std::lower_bound(f.begin(), f.end(), x);
    if (it != f.end() && *it == x) {
      out[i] = v[static_cast<std::size_t>(it - f.begin())];
      continue;
    }
    std::size_t hi = static_cast<std::size_t>(it - f.begin());
    std::size_t lo = hi - 1;
    if (v[lo] > 0.0 && v[hi] > 0.0 && f[lo] > 0.0) {
      double t = (std::log(x) - std::log(f[lo])) / (std::log(f[hi]) - std::log(f[lo]));
      out[i] = std::exp((1.0 - t) * std::log(v[lo]) + t * std::log(v[hi]));
    } else {
      double t = (x - f[lo]) / (f[hi] - f[lo]);
      out[i] = (1.0 - t) * v[lo] + t * v[hi];
    }
  }
  return NoiseSpectrum(freqs, std::move(out), s.unit());
}

}  // namespace detail

// Sum of per-mode thermal displacement PSDs; Langevin forces of distinct
// modes are independent, so PSDs add with no cross terms.
inline NoiseSpectrum multimode_thermal(const std::vector<MechanicalMode>& modes,
                                       const Environment& env,
                                       const std::vector<double>& frequencies) {
  if (modes.empty()) throw DomainError("multimode_thermal: empty mode list");
  std::set<std::string> labels;
  for (const auto& m : modes)
    if (!labels.insert(m.label).second)
      throw ConfigError("duplicate mode label '" + m.label + "'");
  std::vector<double> total(frequencies.size(), 0.0);
  for (const auto& m : modes) {
    m.validate();
    for (std::size_t i = 0; i < frequencies.size(); ++i)
      total[i] += thermal_displacement_psd_at(m, env, frequencies[i]);
  }
  return NoiseSpectrum(frequencies, std::move(total), displacement_psd);
}

inline NoiseSpectrum multimode_thermal(const std::vector<MechanicalMode>& modes,
                                       const Environment& env, const FrequencyGrid& grid) {
  return multimode_thermal(modes, env, grid.frequencies());
}

// Envelope scaled by (p_op/p_ref)^exponent and resampled onto the target
// frequencies (log-log interpolation).
inline NoiseSpectrum gas_index_noise(const GasNoiseModel& model,
                                     const std::vector<double>& frequencies) {
  model.validate();
  double scale = std::pow(model.operating_pressure_mbar / model.reference_pressure_mbar,
                          model.pressure_exponent);
  return detail::resample_log_log(model.reference_envelope, frequencies) * scale;
}

inline NoiseSpectrum gas_index_noise(const GasNoiseModel& model, const FrequencyGrid& grid) {
  return gas_index_noise(model, grid.frequencies());
}

// Everything compose_budget needs, independent of the scenario layer.
struct BudgetInputs {
  OpticalCavity cavity;
  LaserSource laser;
  DetectionChain detection;
  Environment environment;
  std::vector<MechanicalMode> modes;
  std::optional<GasNoiseModel> gas;
};

struct BudgetReport {
  std::vector<double> frequencies;
  // Top-level independent noises: thermal_total, shot, and when configured
  // frequency and gas. total is their pointwise sum.
  std::map<std::string, NoiseSpectrum> components;
  std::map<std::string, NoiseSpectrum> per_mode_thermal;
  NoiseSpectrum total;
  // Measurement floor: every component except the thermal motion itself.
  // This is what "sensitivity" means; thermal peaks are signal, not noise
  // of the readout.
  NoiseSpectrum floor;
  std::vector<std::string> dominant;  // strongest component at each frequency

  BudgetReport() : total(zero()), floor(zero()) {}

 private:
  static NoiseSpectrum zero() { return NoiseSpectrum({1.0, 2.0}, {0.0, 0.0}, displacement_psd); }
};

// Base grid plus extra points packed around every mechanical resonance, so
// narrow thermal peaks are resolved without a huge uniform grid.
inline std::vector<double> budget_frequencies(const FrequencyGrid& grid,
                                              const std::vector<MechanicalMode>& modes,
                                              std::size_t points_per_linewidth = 20,
                                              double half_widths = 60.0) {
  grid.validate();
  std::vector<double> freqs = grid.frequencies();
  for (const auto& m : modes) {
    if (m.resonance_frequency_hz <= grid.f_min_hz || m.resonance_frequency_hz >= grid.f_max_hz)
      continue;
    auto extra = resonance_grid(m.resonance_frequency_hz, m.linewidth_hz(), grid.f_min_hz,
                                grid.f_max_hz, points_per_linewidth, half_widths, 0);
    freqs.insert(freqs.end(), extra.begin(), extra.end());
  }
  std::sort(freqs.begin(), freqs.end());
  std::vector<double> merged;
  merged.reserve(freqs.size());
  for (double f : freqs)
    if (merged.empty() || f > merged.back() * (1.0 + 1e-12)) merged.push_back(f);
  return merged;
}

inline BudgetReport compose_budget(const BudgetInputs& in, const FrequencyGrid& grid,
                                   bool refine_near_modes = true) {
  in.cavity.validate();
  in.laser.validate();
  in.detection.validate();
  in.environment.validate();
  std::vector<double> freqs =
      refine_near_modes ? budget_frequencies(grid, in.modes) : grid.frequencies();

  BudgetReport report;
  report.frequencies = freqs;

  for (const auto& mode : in.modes)
    report.per_mode_thermal.emplace(mode.label,
                                    thermal_displacement_psd(mode, in.environment, freqs));
  report.components.emplace("thermal_total",
                            multimode_thermal(in.modes, in.environment, freqs));
  report.components.emplace("shot", shot_noise_psd(in.cavity, in.laser, in.detection, freqs));
  if (in.laser.frequency_noise) {
    auto envelope = detail::resample_log_log(*in.laser.frequency_noise, freqs);
    report.components.emplace(
        "frequency",
        frequency_noise_to_displacement(in.cavity, in.laser.carrier_frequency_hz(), envelope));
  }
  if (in.gas) report.components.emplace("gas", gas_index_noise(*in.gas, freqs));

  std::vector<double> total(freqs.size(), 0.0), floor(freqs.size(), 0.0);
  for (const auto& [name, spec] : report.components)
    for (std::size_t i = 0; i < freqs.size(); ++i) {
      total[i] += spec.values()[i];
      if (name != "thermal_total") floor[i] += spec.values()[i];
    }
  report.total = NoiseSpectrum(freqs, std::move(total), displacement_psd);
  report.floor = NoiseSpectrum(freqs, std::move(floor), displacement_psd);

  report.dominant.resize(freqs.size());
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    double best = -1.0;
    for (const auto& [name, spec] : report.components)
      if (spec.values()[i] > best) {
        best = spec.values()[i];
        report.dominant[i] = name;
      }
  }
  return report;
}

// One line per decade of the grid naming the component that dominates at the
// most grid points in that decade.
inline std::string budget_summary(const BudgetReport& report) {
  std::string out = "dominant noise component per decade\n";
  double lo = report.frequencies.front();
  double hi = report.frequencies.back();
  for (double d = std::pow(10.0, std::floor(std::log10(lo)));
       d < hi; d *= 10.0) {
    double d_hi = d * 10.0;
    std::map<std::string, int> votes;
    for (std::size_t i = 0; i < report.frequencies.size(); ++i)
      if (report.frequencies[i] >= d && report.frequencies[i] < d_hi)
        ++votes[report.dominant[i]];
    if (votes.empty()) continue;
    auto winner = std::max_element(votes.begin(), votes.end(),
                                   [](const auto& a, const auto& b) { return a.second < b.second; });
    char line[128];
    std::snprintf(line, sizeof line, "%.3e Hz to %.3e Hz: %s\n", d, d_hi,
                  winner->first.c_str());
    out += line;
  }
  return out;
}

}  // namespace optomech
