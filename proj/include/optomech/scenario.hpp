#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "optomech/budget.hpp"
#include "optomech/cavity.hpp"
#include "optomech/cold_damping.hpp"
#include "optomech/csv.hpp"
#include "optomech/errors.hpp"
#include "optomech/mechanics.hpp"
#include "optomech/mode_shape.hpp"
#include "optomech/spectrum.hpp"

namespace optomech {

// Analytic clamped-beam stand-in (or imported grid) used by the scan command.
struct BeamShapeConfig {
  std::size_t mode_index = 1;
  double length_m = 1e-3;
  double width_m = 1e-3;
  double areal_density_kg_m2 = 0.13974;  // 60 um of silicon
  std::size_t grid_nx = 201;
  std::size_t grid_ny = 65;
  std::string shape_csv;  // when set, import instead of the analytic generator

  void validate() const {
    if (shape_csv.empty() && (mode_index < 1 || mode_index > 10))
      throw ConfigError("beam: mode_index must be in [1, 10]");
    if (!(length_m > 0.0 && width_m > 0.0))
      throw ConfigError("beam: length_m and width_m must be positive");
    if (!(areal_density_kg_m2 > 0.0))
      throw ConfigError("beam: areal_density_kg_m2 must be positive");
    if (grid_nx < 2 || grid_ny < 2) throw ConfigError("beam: grid must be at least 2x2");
  }
};

struct DspConfig {
  double sample_rate_hz = 2e6;
  double duration_s = 5.12;
  double rbw_hz = 20.0;
  double fit_halfwidth_linewidths = 10.0;

  void validate() const {
    if (!(sample_rate_hz > 0.0) || !(duration_s > 0.0) || !(rbw_hz > 0.0))
      throw ConfigError("dsp: sample_rate_hz, duration_s and rbw_hz must be positive");
    if (!(fit_halfwidth_linewidths > 1.0))
      throw ConfigError("dsp: fit_halfwidth_linewidths must exceed 1");
  }
};

struct ScanConfig {
  std::size_t n_positions = 201;

  void validate() const {
    if (n_positions < 3) throw ConfigError("scan: n_positions must be at least 3");
  }
};

// A full experiment description. Struct defaults are the reference apparatus;
// the config file overrides them and is echoed back fully resolved.
struct Scenario {
  OpticalCavity cavity;
  LaserSource laser;
  DetectionChain detection;
  Environment environment;
  std::vector<MechanicalMode> modes;
  std::optional<GasNoiseModel> gas;
  std::optional<FeedbackController> feedback;
  std::vector<double> feedback_gains;
  std::optional<BeamShapeConfig> beam;
  FrequencyGrid grid{1e3, 4e6, 1200, FrequencyGrid::Spacing::logarithmic};
  DspConfig dsp;
  ScanConfig scan;
  std::uint64_t seed = 1;
  std::vector<std::string> outputs;  // optional artifact filename filter

  std::string frequency_noise_path;  // absolute paths of loaded side files
  std::string gas_envelope_path;

  void validate() const {
    cavity.validate();
    laser.validate();
    detection.validate();
    environment.validate();
    for (const auto& m : modes) m.validate();
    if (gas) gas->validate();
    if (feedback) feedback->validate();
    if (beam) beam->validate();
    grid.validate();
    dsp.validate();
    scan.validate();
    for (double g : feedback_gains)
      if (!(g >= 0.0)) throw ConfigError("feedback: sweep gains must be >= 0");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::string resolve_path(const std::string& value, const std::string& base_dir) {
  std::filesystem::path p(value);
  if (p.is_absolute()) return p.lexically_normal().string();
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

// %.17g: enough digits that the resolved-config echo reparses bit-identically.
inline std::string format_exact(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace detail

// Strict INI-style parser: every key must be known, every referenced file
// must load, every invariant must hold. [mode] sections repeat, one per mode.
inline Scenario load_scenario_text(const std::string& text, const std::string& base_dir) {
  Scenario sc;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  int parsed_items = 0;
  bool imprecision_auto = false;

  auto number = [&](const std::string& v, const std::string& key) {
    try {
      return detail::parse_double(v, key);
    } catch (const Error& e) {
      throw ConfigError(std::string(e.what()), line_no);
    }
  };
  auto count = [&](const std::string& v, const std::string& key) {
    double x = number(v, key);
    if (!(x >= 0.0) || x != std::floor(x))
      throw ConfigError(key + " must be a nonnegative integer", line_no);
    return static_cast<std::uint64_t>(x);
  };

  while (std::getline(in, line)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("unterminated section header", line_no);
      section = detail::trim(line.substr(1, line.size() - 2));
      static const char* known[] = {"cavity", "laser", "detection", "environment", "mode",
                                    "modes",  "beam",  "feedback",  "gas",         "grid",
                                    "dsp",    "scan",  "run"};
      bool ok = false;
      for (const char* k : known) ok = ok || section == k;
      if (!ok) throw ConfigError("unknown section [" + section + "]", line_no);
      if (section == "mode") {
        sc.modes.emplace_back();
        sc.modes.back().label.clear();  // unlabeled modes get numbered below
      }
      if (section == "beam" && !sc.beam) sc.beam.emplace();
      if (section == "feedback" && !sc.feedback) sc.feedback.emplace();
      ++parsed_items;
      continue;
    }

    std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line_no);
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError("empty key or value", line_no);
    if (section.empty()) throw ConfigError("key '" + key + "' outside any section", line_no);
    ++parsed_items;

    auto unknown = [&]() {
      throw ConfigError("unknown key '" + key + "' in [" + section + "]", line_no);
    };

    if (section == "cavity") {
      if (key == "length_m") sc.cavity.length_m = number(value, key);
      else if (key == "input_transmission") sc.cavity.input_transmission = number(value, key);
      else if (key == "round_trip_loss") sc.cavity.round_trip_loss = number(value, key);
      else if (key == "wavelength_m") sc.cavity.wavelength_m = number(value, key);
      else if (key == "waist_m") sc.cavity.waist_m = number(value, key);
      else unknown();
    } else if (section == "laser") {
      if (key == "power_w") sc.laser.power_w = number(value, key);
      else if (key == "wavelength_m") sc.laser.wavelength_m = number(value, key);
      else if (key == "modulation_index") sc.laser.modulation_index = number(value, key);
      else if (key == "sideband_frequency_hz")
        sc.laser.sideband_frequency_hz = number(value, key);
      else if (key == "frequency_noise_csv") {
        sc.frequency_noise_path = detail::resolve_path(value, base_dir);
        sc.laser.frequency_noise = load_spectrum_csv(sc.frequency_noise_path);
      } else unknown();
    } else if (section == "detection") {
      if (key == "mode_matching") sc.detection.mode_matching = number(value, key);
      else if (key == "detection_efficiency")
        sc.detection.detection_efficiency = number(value, key);
      else unknown();
    } else if (section == "environment") {
      if (key == "temperature_k") sc.environment.temperature_k = number(value, key);
      else unknown();
    } else if (section == "mode") {
      if (sc.modes.empty()) throw ConfigError("mode key before any [mode] section", line_no);
      auto& m = sc.modes.back();
      if (key == "label") m.label = value;
      else if (key == "frequency_hz") m.resonance_frequency_hz = number(value, key);
      else if (key == "mass_kg") m.effective_mass_kg = number(value, key);
      else if (key == "quality_factor") m.quality_factor = number(value, key);
      else if (key == "fem_frequency_hz") m.fem_frequency_hz = number(value, key);
      else if (key == "fem_mass_kg") m.fem_mass_kg = number(value, key);
      else unknown();
    } else if (section == "modes") {
      if (key == "table_csv") {
        auto loaded = load_mode_table_csv(detail::resolve_path(value, base_dir));
        sc.modes.insert(sc.modes.end(), loaded.begin(), loaded.end());
      } else unknown();
    } else if (section == "beam") {
      auto& b = *sc.beam;
      if (key == "mode_index") b.mode_index = count(value, key);
      else if (key == "length_m") b.length_m = number(value, key);
      else if (key == "width_m") b.width_m = number(value, key);
      else if (key == "areal_density_kg_m2") b.areal_density_kg_m2 = number(value, key);
      else if (key == "grid_nx") b.grid_nx = count(value, key);
      else if (key == "grid_ny") b.grid_ny = count(value, key);
      else if (key == "shape_csv") b.shape_csv = detail::resolve_path(value, base_dir);
      else unknown();
    } else if (section == "feedback") {
      auto& fb = *sc.feedback;
      if (key == "gain") fb.gain = number(value, key);
      else if (key == "imprecision_psd_m2_hz") {
        if (value == "auto") imprecision_auto = true;
        else fb.imprecision_psd_m2_hz = number(value, key);
      } else if (key == "enabled") {
        if (value == "true") fb.enabled = true;
        else if (value == "false") fb.enabled = false;
        else throw ConfigError("enabled must be true or false", line_no);
      } else if (key == "gains") {
        sc.feedback_gains.clear();
        for (const auto& item : detail::split_list(value))
          sc.feedback_gains.push_back(number(item, key));
      } else unknown();
    } else if (section == "gas") {
      if (!sc.gas) {
        // Envelope placeholder; the real envelope key must follow.
        sc.gas.emplace(GasNoiseModel{NoiseSpectrum({1.0, 2.0}, {0.0, 0.0}, displacement_psd),
                                     1000.0, 1e-2, 2.0});
      }
      if (key == "envelope_csv") {
        sc.gas_envelope_path = detail::resolve_path(value, base_dir);
        sc.gas->reference_envelope = load_spectrum_csv(sc.gas_envelope_path);
      } else if (key == "reference_pressure_mbar")
        sc.gas->reference_pressure_mbar = number(value, key);
      else if (key == "operating_pressure_mbar")
        sc.gas->operating_pressure_mbar = number(value, key);
      else if (key == "pressure_exponent") sc.gas->pressure_exponent = number(value, key);
      else unknown();
    } else if (section == "grid") {
      if (key == "f_min_hz") sc.grid.f_min_hz = number(value, key);
      else if (key == "f_max_hz") sc.grid.f_max_hz = number(value, key);
      else if (key == "n_points") sc.grid.n_points = count(value, key);
      else if (key == "spacing") {
        if (value == "log" || value == "logarithmic") sc.grid.spacing = FrequencyGrid::Spacing::logarithmic;
        else if (value == "linear" || value == "lin") sc.grid.spacing = FrequencyGrid::Spacing::linear;
        else throw ConfigError("spacing must be log or linear", line_no);
      } else unknown();
    } else if (section == "dsp") {
      if (key == "sample_rate_hz") sc.dsp.sample_rate_hz = number(value, key);
      else if (key == "duration_s") sc.dsp.duration_s = number(value, key);
      else if (key == "rbw_hz") sc.dsp.rbw_hz = number(value, key);
      else if (key == "fit_halfwidth_linewidths")
        sc.dsp.fit_halfwidth_linewidths = number(value, key);
      else unknown();
    } else if (section == "scan") {
      if (key == "n_positions") sc.scan.n_positions = count(value, key);
      else unknown();
    } else if (section == "run") {
      if (key == "seed") sc.seed = count(value, key);
      else if (key == "outputs") sc.outputs = detail::split_list(value);
      else unknown();
    } else {
      unknown();
    }
  }

  if (parsed_items == 0) throw ConfigError("config file is empty");
  if (sc.gas && sc.gas_envelope_path.empty())
    throw ConfigError("[gas] section requires envelope_csv");

  for (std::size_t i = 0; i < sc.modes.size(); ++i)
    if (sc.modes[i].label.empty()) sc.modes[i].label = "mode" + std::to_string(i + 1);

  if (imprecision_auto) {
    if (sc.modes.empty())
      throw ConfigError("imprecision_psd_m2_hz = auto needs at least one [mode]");
    double floor =
        shot_noise_floor(sc.cavity, sc.laser, sc.detection,
                         sc.modes.front().resonance_frequency_hz);
    sc.feedback->imprecision_psd_m2_hz = floor * floor;
  }

  sc.validate();
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string dir = std::filesystem::path(path).parent_path().string();
  if (dir.empty()) dir = ".";
  return load_scenario_text(buffer.str(), dir);
}

// Fully resolved scenario echo: every value explicit, reparses to the same
// scenario bit for bit.
inline std::string serialize_scenario(const Scenario& sc) {
  using detail::format_exact;
  std::string out;
  auto kv = [&](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
  auto kd = [&](const std::string& k, double v) { kv(k, format_exact(v)); };

  out += "[cavity]\n";
  kd("length_m", sc.cavity.length_m);
  kd("input_transmission", sc.cavity.input_transmission);
  kd("round_trip_loss", sc.cavity.round_trip_loss);
  kd("wavelength_m", sc.cavity.wavelength_m);
  kd("waist_m", sc.cavity.waist_m);

  out += "\n[laser]\n";
  kd("power_w", sc.laser.power_w);
  kd("wavelength_m", sc.laser.wavelength_m);
  kd("modulation_index", sc.laser.modulation_index);
  kd("sideband_frequency_hz", sc.laser.sideband_frequency_hz);
  if (!sc.frequency_noise_path.empty()) kv("frequency_noise_csv", sc.frequency_noise_path);

  out += "\n[detection]\n";
  kd("mode_matching", sc.detection.mode_matching);
  kd("detection_efficiency", sc.detection.detection_efficiency);

  out += "\n[environment]\n";
  kd("temperature_k", sc.environment.temperature_k);

  for (const auto& m : sc.modes) {
    out += "\n[mode]\n";
    kv("label", m.label);
    kd("frequency_hz", m.resonance_frequency_hz);
    kd("mass_kg", m.effective_mass_kg);
    kd("quality_factor", m.quality_factor);
    kd("fem_frequency_hz", m.fem_frequency_hz);
    kd("fem_mass_kg", m.fem_mass_kg);
  }

  if (sc.beam) {
    out += "\n[beam]\n";
    kv("mode_index", std::to_string(sc.beam->mode_index));
    kd("length_m", sc.beam->length_m);
    kd("width_m", sc.beam->width_m);
    kd("areal_density_kg_m2", sc.beam->areal_density_kg_m2);
    kv("grid_nx", std::to_string(sc.beam->grid_nx));
    kv("grid_ny", std::to_string(sc.beam->grid_ny));
    if (!sc.beam->shape_csv.empty()) kv("shape_csv", sc.beam->shape_csv);
  }

  if (sc.feedback) {
    out += "\n[feedback]\n";
    kd("gain", sc.feedback->gain);
    kd("imprecision_psd_m2_hz", sc.feedback->imprecision_psd_m2_hz);
    kv("enabled", sc.feedback->enabled ? "true" : "false");
    if (!sc.feedback_gains.empty()) {
      std::string list;
      for (double g : sc.feedback_gains) list += (list.empty() ? "" : ", ") + format_exact(g);
      kv("gains", list);
    }
  }

  if (sc.gas) {
    out += "\n[gas]\n";
    kv("envelope_csv", sc.gas_envelope_path);
    kd("reference_pressure_mbar", sc.gas->reference_pressure_mbar);
    kd("operating_pressure_mbar", sc.gas->operating_pressure_mbar);
    kd("pressure_exponent", sc.gas->pressure_exponent);
  }

  out += "\n[grid]\n";
  kd("f_min_hz", sc.grid.f_min_hz);
  kd("f_max_hz", sc.grid.f_max_hz);
  kv("n_points", std::to_string(sc.grid.n_points));
  kv("spacing", sc.grid.spacing == FrequencyGrid::Spacing::logarithmic ? "log" : "linear");

  out += "\n[dsp]\n";
  kd("sample_rate_hz", sc.dsp.sample_rate_hz);
  kd("duration_s", sc.dsp.duration_s);
  kd("rbw_hz", sc.dsp.rbw_hz);
  kd("fit_halfwidth_linewidths", sc.dsp.fit_halfwidth_linewidths);

  out += "\n[scan]\n";
  kv("n_positions", std::to_string(sc.scan.n_positions));

  out += "\n[run]\n";
  kv("seed", std::to_string(sc.seed));
  if (!sc.outputs.empty()) {
    std::string list;
    for (const auto& o : sc.outputs) list += (list.empty() ? "" : ", ") + o;
    kv("outputs", list);
  }
  return out;
}

}  // namespace optomech
