#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "optomech/csv.hpp"
#include "optomech/errors.hpp"
#include "optomech/mechanics.hpp"

namespace optomech {

// Transverse displacement profile u(x, y) of one vibration mode, sampled on a
// regular lattice over the resonator surface. Amplitudes are normalized to
// max |u| = 1 on construction; the mass information lives in areal_density.
class ModeShape {
 public:
  ModeShape(std::vector<double> x_m, std::vector<double> y_m, std::vector<double> amplitudes,
            double areal_density_kg_m2)
      : x_(std::move(x_m)), y_(std::move(y_m)), u_(std::move(amplitudes)),
        areal_density_(areal_density_kg_m2) {
    if (x_.size() < 2 || y_.size() < 2)
      throw DomainError("ModeShape: lattice needs at least 2 points per axis");
    if (u_.size() != x_.size() * y_.size())
      throw DomainError("ModeShape: amplitude array does not match lattice size");
    if (!(areal_density_ > 0.0))
      throw DomainError("ModeShape: areal density must be positive");
    check_regular(x_, "x");
    check_regular(y_, "y");
    double peak = 0.0;
    for (double u : u_) peak = std::max(peak, std::abs(u));
    if (peak <= 0.0) throw DomainError("ModeShape: amplitudes are all zero");
    for (double& u : u_) u /= peak;
  }

  const std::vector<double>& x() const { return x_; }
  const std::vector<double>& y() const { return y_; }
  double at(std::size_t ix, std::size_t iy) const { return u_[iy * x_.size() + ix]; }
  const std::vector<double>& amplitudes() const { return u_; }
  double areal_density() const { return areal_density_; }
  double dx() const { return x_[1] - x_[0]; }
  double dy() const { return y_[1] - y_[0]; }

 private:
  static void check_regular(const std::vector<double>& g, const char* axis) {
    double step = g[1] - g[0];
    if (!(step > 0.0))
      throw DomainError(std::string("ModeShape: ") + axis + " grid must be increasing");
    for (std::size_t i = 1; i < g.size(); ++i) {
      double d = g[i] - g[i - 1];
      if (std::abs(d - step) > 1e-9 * step)
        throw DomainError(std::string("ModeShape: ") + axis + " grid must be regular");
    }
  }

  std::vector<double> x_, y_, u_;
  double areal_density_;
};

// Intracavity optical spot: Gaussian intensity profile with 1/e^2 radius
// equal to the cavity waist.
struct OpticalSpot {
  double x_m = 0.0;
  double y_m = 0.0;
  double waist_m = 60e-6;

  void validate() const {
    if (!(waist_m > 0.0)) throw DomainError("spot: waist must be positive");
  }
};

namespace detail {

// Eigenvalues z_n = beta_n * length of the clamped-clamped Euler-Bernoulli
// beam, roots of cos(z) cosh(z) = 1.
inline constexpr std::array<double, 10> kClampedBeamRoots = {
    4.730040744862704,  7.853204624095838,  10.995607838001671, 14.137165491257464,
    17.278759657399480, 20.420352245626059, 23.561944902040455, 26.703537555508188,
    29.845130209103253, 32.986722862692822};

// Clamped-clamped eigenfunction evaluated in the cancellation-free form
// u(y) = exp(-y) + (1-sigma) sinh(y) - cos(y) + sigma sin(y),  y = beta x,
// which stays O(1) in every term (the textbook cosh/sinh form loses ~10
// digits near the far clamp for high mode numbers).
inline double clamped_beam_profile(double y, double z) {
  double delta = (std::cos(z) - std::sin(z) - std::exp(-z)) / (std::sinh(z) - std::sin(z));
  return std::exp(-y) + delta * std::sinh(y) - std::cos(y) + (1.0 - delta) * std::sin(y);
}

}  // namespace detail

// Analytic stand-in for FEM mode data: flexural mode n of a doubly-clamped
// beam, extruded uniformly across the width.
inline ModeShape clamped_beam_mode_shape(std::size_t mode_index, double beam_length_m,
                                         double width_m, double areal_density_kg_m2,
                                         std::size_t nx = 201, std::size_t ny = 65) {
  if (mode_index < 1 || mode_index > detail::kClampedBeamRoots.size())
    throw DomainError("clamped_beam_mode_shape: mode index must be in [1, 10]");
  if (!(beam_length_m > 0.0 && width_m > 0.0))
    throw DomainError("clamped_beam_mode_shape: dimensions must be positive");
  if (nx < 2 || ny < 2) throw DomainError("clamped_beam_mode_shape: lattice too coarse");
  double z = detail::kClampedBeamRoots[mode_index - 1];
  std::vector<double> xs(nx), ys(ny);
  for (std::size_t i = 0; i < nx; ++i)
    xs[i] = beam_length_m * static_cast<double>(i) / static_cast<double>(nx - 1);
  for (std::size_t j = 0; j < ny; ++j)
    ys[j] = width_m * static_cast<double>(j) / static_cast<double>(ny - 1);
  std::vector<double> u(nx * ny);
  for (std::size_t i = 0; i < nx; ++i) {
    double profile = detail::clamped_beam_profile(z * xs[i] / beam_length_m, z);
    for (std::size_t j = 0; j < ny; ++j) u[j * nx + i] = profile;
  }
  return ModeShape(std::move(xs), std::move(ys), std::move(u), areal_density_kg_m2);
}

struct EffectiveMassResult {
  double mass_kg = 0.0;        // infinity when the spot sits on a node
  double spot_capture = 0.0;   // fraction of the Gaussian weight inside the grid
  bool edge_warning = false;   // capture < 99%
  bool is_infinite() const { return std::isinf(mass_kg); }
};

// Effective mass seen by a Gaussian spot: [int rho u^2 dA] / [int u w dA]^2
// with w the unit-integral Gaussian intensity weight. The readout noise
// level scales as 1/sqrt(m_eff).
inline EffectiveMassResult effective_mass_at_spot(const ModeShape& shape,
                                                  const OpticalSpot& spot) {
  spot.validate();
  if (spot.x_m < shape.x().front() || spot.x_m > shape.x().back() ||
      spot.y_m < shape.y().front() || spot.y_m > shape.y().back())
    throw DomainError("effective_mass_at_spot: spot center outside the shape grid");

  const auto& xs = shape.x();
  const auto& ys = shape.y();
  double w0 = spot.waist_m;
  double norm = 2.0 / (M_PI * w0 * w0);
  double mass_integral = 0.0, overlap = 0.0, abs_overlap = 0.0, capture = 0.0;
  for (std::size_t j = 0; j < ys.size(); ++j) {
    double wy = (j == 0 || j + 1 == ys.size()) ? 0.5 : 1.0;
    double ry = ys[j] - spot.y_m;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double wx = (i == 0 || i + 1 == xs.size()) ? 0.5 : 1.0;
      double rx = xs[i] - spot.x_m;
      double cell = wx * wy;
      double u = shape.at(i, j);
      double gauss = norm * std::exp(-2.0 * (rx * rx + ry * ry) / (w0 * w0));
      mass_integral += cell * u * u;
      overlap += cell * u * gauss;
      abs_overlap += cell * std::abs(u) * gauss;
      capture += cell * gauss;
    }
  }
  double area = shape.dx() * shape.dy();
  mass_integral *= area * shape.areal_density();
  overlap *= area;
  abs_overlap *= area;
  capture *= area;

  EffectiveMassResult result;
  result.spot_capture = capture;
  result.edge_warning = capture < 0.99;
  if (std::abs(overlap) <= 1e-12 * abs_overlap || overlap == 0.0)
    result.mass_kg = std::numeric_limits<double>::infinity();
  else
    result.mass_kg = mass_integral / (overlap * overlap);
  return result;
}

struct ScanPoint {
  double position_m = 0.0;
  double relative_level = 0.0;  // thermal peak ASD normalized to the scan maximum
};

// Thermal noise level versus lateral spot position along the beam axis,
// normalized to the maximum over the scan. Spots on nodes read zero.
inline std::vector<ScanPoint> overlap_scan(const ModeShape& shape, double waist_m,
                                           const std::vector<double>& positions_m) {
  if (positions_m.empty()) throw DomainError("overlap_scan: empty position list");
  double y_center = 0.5 * (shape.y().front() + shape.y().back());
  std::vector<ScanPoint> scan(positions_m.size());
  double level_max = 0.0;
  for (std::size_t i = 0; i < positions_m.size(); ++i) {
    auto m = effective_mass_at_spot(shape, {positions_m[i], y_center, waist_m});
    double level = m.is_infinite() ? 0.0 : 1.0 / std::sqrt(m.mass_kg);
    scan[i] = {positions_m[i], level};
    level_max = std::max(level_max, level);
  }
  if (level_max > 0.0)
    for (auto& p : scan) p.relative_level /= level_max;
  return scan;
}

// Mode shape file: '#' header with the areal density, then x_m,y_m,u rows
// over a complete regular lattice.
inline void save_mode_shape_csv(const ModeShape& shape, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "# areal_density_kg_m2=" << detail::format_double(shape.areal_density()) << "\n";
  out << "x_m,y_m,u\n";
  for (std::size_t j = 0; j < shape.y().size(); ++j)
    for (std::size_t i = 0; i < shape.x().size(); ++i)
      out << detail::format_double(shape.x()[i]) << ',' << detail::format_double(shape.y()[j])
          << ',' << detail::format_double(shape.at(i, j)) << '\n';
  if (!out) throw IoError("write failure on '" + path + "'");
}

inline ModeShape load_mode_shape_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mode shape file '" + path + "'");
  std::string line;
  double density = 0.0;
  std::vector<double> xs, ys, us;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line == "x_m,y_m,u") continue;
    if (line[0] == '#') {
      auto pos = line.find("areal_density_kg_m2=");
      if (pos != std::string::npos)
        density = detail::parse_double(line.substr(pos + 20), path + " header");
      continue;
    }
    auto fields = detail::split_csv_line(line);
    if (fields.size() != 3)
      throw IoError(path + ": expected three columns at line " + std::to_string(line_no));
    std::string where = path + " line " + std::to_string(line_no);
    xs.push_back(detail::parse_double(fields[0], where));
    ys.push_back(detail::parse_double(fields[1], where));
    us.push_back(detail::parse_double(fields[2], where));
  }
  if (density <= 0.0) throw IoError(path + ": missing '# areal_density_kg_m2=' header");
  if (us.empty()) throw IoError(path + ": no data rows");

  std::vector<double> ux, uy;
  for (double x : xs)
    if (ux.empty() || x > ux.back() + 1e-15)
      ux.push_back(x);
    else if (x < ux.front())
      throw IoError(path + ": rows must be ordered y-major, x ascending");
  for (double y : ys)
    if (uy.empty() || y > uy.back()) uy.push_back(y);
  if (ux.size() * uy.size() != us.size())
    throw IoError(path + ": rows do not form a complete regular lattice");
  return ModeShape(std::move(ux), std::move(uy), std::move(us), density);
}

// Mode table file: label,f_m_hz,m_eff_kg,q,fem_f_hz,fem_m_kg per row.
inline std::vector<MechanicalMode> load_mode_table_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mode table '" + path + "'");
  std::string line;
  std::vector<MechanicalMode> modes;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#' || line.rfind("label,", 0) == 0) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != 6)
      throw IoError(path + ": expected six columns at line " + std::to_string(line_no));
    std::string where = path + " line " + std::to_string(line_no);
    MechanicalMode mode;
    mode.label = fields[0];
    mode.resonance_frequency_hz = detail::parse_double(fields[1], where);
    mode.effective_mass_kg = detail::parse_double(fields[2], where);
    mode.quality_factor = detail::parse_double(fields[3], where);
    mode.fem_frequency_hz = detail::parse_double(fields[4], where);
    mode.fem_mass_kg = detail::parse_double(fields[5], where);
    mode.validate();
    modes.push_back(std::move(mode));
  }
  if (modes.empty()) throw IoError(path + ": no mode rows");
  return modes;
}

}  // namespace optomech
