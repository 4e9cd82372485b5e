#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "optomech/budget.hpp"
#include "optomech/cold_damping.hpp"
#include "optomech/csv.hpp"
#include "optomech/detail/sha256.hpp"
#include "optomech/errors.hpp"
#include "optomech/fitting.hpp"
#include "optomech/mode_shape.hpp"
#include "optomech/scenario.hpp"
#include "optomech/signal.hpp"
#include "optomech/welch.hpp"

namespace optomech {

enum class Command { budget, cool, scan, fit, synth };

inline Command parse_command(const std::string& name) {
  if (name == "budget") return Command::budget;
  if (name == "cool") return Command::cool;
  if (name == "scan") return Command::scan;
  if (name == "fit") return Command::fit;
  if (name == "synth") return Command::synth;
  throw ConfigError("unknown command '" + name + "' (budget, cool, scan, fit, synth)");
}

struct RunResult {
  std::vector<std::string> files;  // artifact names, manifest last
  std::string out_dir;
};

namespace detail {

// Collects artifacts, honoring the scenario's optional output filter;
// resolved_config and the manifest are always written.
class ArtifactSink {
 public:
  ArtifactSink(std::string out_dir, std::vector<std::string> filter)
      : dir_(std::move(out_dir)), filter_(std::move(filter)) {
    std::filesystem::create_directories(dir_);
  }

  bool wants(const std::string& name) const {
    return filter_.empty() ||
           std::find(filter_.begin(), filter_.end(), name) != filter_.end();
  }

  std::string path(const std::string& name) const {
    return (std::filesystem::path(dir_) / name).string();
  }

  void spectrum(const std::string& name, const NoiseSpectrum& s) {
    if (!wants(name)) return;
    save_spectrum_csv(s, path(name));
    written_.push_back(name);
  }

  void text(const std::string& name, const std::string& body, bool always = false) {
    if (!always && !wants(name)) return;
    std::ofstream out(path(name), std::ios::binary);
    if (!out) throw IoError("cannot open '" + path(name) + "' for writing");
    out << body;
    if (!out) throw IoError("write failure on '" + path(name) + "'");
    written_.push_back(name);
  }

  void timeseries(const std::string& name, const TimeSeries& ts) {
    if (!wants(name)) return;
    save_timeseries(ts, path(name));
    written_.push_back(name);
  }

  void mode_shape(const std::string& name, const ModeShape& shape) {
    if (!wants(name)) return;
    save_mode_shape_csv(shape, path(name));
    written_.push_back(name);
  }

  // Manifest rows are sorted by name so the byte content is independent of
  // write order; the manifest itself is not listed.
  RunResult finish() {
    std::sort(written_.begin(), written_.end());
    std::string manifest;
    for (const auto& name : written_) {
      auto p = path(name);
      auto bytes = std::filesystem::file_size(p);
      manifest += name + " " + std::to_string(bytes) + " " + sha256_file_hex(p) + "\n";
    }
    text("manifest.txt", manifest, true);
    return {written_, dir_};
  }

 private:
  std::string dir_;
  std::vector<std::string> filter_;
  std::vector<std::string> written_;
};

inline std::string gain_tag(double g) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", g);
  return buf;
}

inline BudgetInputs budget_inputs(const Scenario& sc) {
  return {sc.cavity, sc.laser, sc.detection, sc.environment, sc.modes, sc.gas};
}

inline const MechanicalMode& primary_mode(const Scenario& sc, const char* command) {
  if (sc.modes.empty())
    throw ConfigError(std::string(command) + " needs at least one [mode] section");
  return sc.modes.front();
}

inline void run_budget(const Scenario& sc, ArtifactSink& sink) {
  primary_mode(sc, "budget");
  BudgetReport report = compose_budget(budget_inputs(sc), sc.grid);
  for (const auto& [name, spec] : report.components) sink.spectrum(name + ".csv", spec);
  for (const auto& [label, spec] : report.per_mode_thermal)
    sink.spectrum("thermal_mode_" + label + ".csv", spec);
  sink.spectrum("total.csv", report.total);
  sink.spectrum("floor.csv", report.floor);
  sink.text("budget_summary.txt", budget_summary(report));
}

inline void run_cool(const Scenario& sc, ArtifactSink& sink) {
  const auto& mode = primary_mode(sc, "cool");
  FeedbackController fb = sc.feedback.value_or(FeedbackController{});
  std::vector<double> gains = sc.feedback_gains;
  if (gains.empty()) gains = sc.feedback ? std::vector<double>{fb.gain}
                                         : std::vector<double>{0.0, 1.0, 3.0, 9.0, 59.0};
  auto results = gain_sweep(mode, sc.environment, fb, gains, sc.grid);
  std::string summary = "gain,t_eff_k,linewidth_hz,area_m2\n";
  for (const auto& r : results) {
    summary += detail::format_double(r.gain) + "," +
               detail::format_double(r.effective_temperature_k) + "," +
               detail::format_double(r.effective_linewidth_hz) + "," +
               detail::format_double(r.area_m2) + "\n";
    sink.spectrum("cool_true_g" + gain_tag(r.gain) + ".csv", r.true_motion);
    sink.spectrum("cool_inloop_g" + gain_tag(r.gain) + ".csv", r.in_loop);
  }
  sink.text("cooling_summary.csv", summary);
}

inline void run_scan(const Scenario& sc, ArtifactSink& sink) {
  if (!sc.beam) throw ConfigError("scan needs a [beam] section");
  const auto& b = *sc.beam;
  ModeShape shape = b.shape_csv.empty()
                        ? clamped_beam_mode_shape(b.mode_index, b.length_m, b.width_m,
                                                  b.areal_density_kg_m2, b.grid_nx, b.grid_ny)
                        : load_mode_shape_csv(b.shape_csv);
  std::vector<double> positions(sc.scan.n_positions);
  double x0 = shape.x().front(), x1 = shape.x().back();
  for (std::size_t i = 0; i < positions.size(); ++i)
    positions[i] =
        x0 + (x1 - x0) * static_cast<double>(i) / static_cast<double>(positions.size() - 1);
  auto scan = overlap_scan(shape, sc.cavity.waist_m, positions);
  std::string csv = "position_m,relative_level\n";
  for (const auto& p : scan)
    csv += detail::format_double(p.position_m) + "," +
           detail::format_double(p.relative_level) + "\n";
  sink.text("scan.csv", csv);
  sink.mode_shape("mode_shape.csv", shape);
}

// Model spectrum a synthesized record is drawn from: thermal motion of the
// modes on top of the shot-noise floor, dense around each resonance, defined
// up to Nyquist.
inline NoiseSpectrum synthesis_model(const Scenario& sc) {
  double nyquist = sc.dsp.sample_rate_hz / 2.0;
  double f_lo = std::min(sc.grid.f_min_hz, sc.modes.front().resonance_frequency_hz / 100.0);
  std::vector<double> freqs;
  for (const auto& m : sc.modes) {
    if (m.resonance_frequency_hz >= nyquist) continue;
    auto part = resonance_grid(m.resonance_frequency_hz, m.linewidth_hz(), f_lo, nyquist);
    freqs.insert(freqs.end(), part.begin(), part.end());
  }
  if (freqs.empty()) throw ConfigError("synth: no mode resonance below Nyquist");
  std::sort(freqs.begin(), freqs.end());
  freqs.erase(std::unique(freqs.begin(), freqs.end()), freqs.end());
  auto thermal = multimode_thermal(sc.modes, sc.environment, freqs);
  auto shot = shot_noise_psd(sc.cavity, sc.laser, sc.detection, freqs);
  return thermal + shot;
}

inline void run_fit(const Scenario& sc, ArtifactSink& sink) {
  const auto& mode = primary_mode(sc, "fit");
  auto model = synthesis_model(sc);
  auto ts = synthesize_timeseries(model, sc.dsp.sample_rate_hz, sc.dsp.duration_s, sc.seed);
  auto ws = welch_psd(ts, sc.dsp.rbw_hz);
  double half = sc.dsp.fit_halfwidth_linewidths * std::max(mode.linewidth_hz(), ws.enbw_hz);
  auto fit = fit_lorentzian(ws, mode.resonance_frequency_hz - half,
                            mode.resonance_frequency_hz + half, sc.environment);
  double t_eff = equipartition_temperature(fit, mode.effective_mass_kg);

  std::string summary =
      "f0_hz,linewidth_hz,q,peak_psd_m2_hz,background_psd_m2_hz,area_m2,m_eff_kg,t_eff_k,"
      "residual_norm,iterations\n";
  summary += detail::format_double(fit.center_frequency_hz) + "," +
             detail::format_double(fit.linewidth_fwhm_hz) + "," +
             detail::format_double(fit.derived_q) + "," +
             detail::format_double(fit.peak_psd) + "," +
             detail::format_double(fit.background_psd) + "," +
             detail::format_double(fit.area_m2) + "," +
             detail::format_double(fit.derived_mass_kg) + "," +
             detail::format_double(t_eff) + "," + detail::format_double(fit.residual_norm) +
             "," + std::to_string(fit.iterations) + "\n";
  sink.text("fit_summary.csv", summary);
  sink.spectrum("fit_psd.csv", ws.psd);
}

inline void run_synth(const Scenario& sc, ArtifactSink& sink) {
  primary_mode(sc, "synth");
  auto model = synthesis_model(sc);
  auto ts = synthesize_timeseries(model, sc.dsp.sample_rate_hz, sc.dsp.duration_s, sc.seed);
  sink.timeseries("timeseries.bin", ts);
  auto ws = welch_psd(ts, sc.dsp.rbw_hz);
  sink.spectrum("psd_welch.csv", ws.psd);
}

}  // namespace detail

inline RunResult run_command(const Scenario& scenario, Command command,
                             const std::string& out_dir,
                             std::optional<FrequencyGrid> grid_override = {},
                             std::optional<std::uint64_t> seed_override = {}) {
  Scenario sc = scenario;
  if (grid_override) sc.grid = *grid_override;
  if (seed_override) sc.seed = *seed_override;
  sc.validate();

  detail::ArtifactSink sink(out_dir, sc.outputs);
  switch (command) {
    case Command::budget: detail::run_budget(sc, sink); break;
    case Command::cool: detail::run_cool(sc, sink); break;
    case Command::scan: detail::run_scan(sc, sink); break;
    case Command::fit: detail::run_fit(sc, sink); break;
    case Command::synth: detail::run_synth(sc, sink); break;
  }
  sink.text("resolved_config.cfg", serialize_scenario(sc), true);
  return sink.finish();
}

}  // namespace optomech
