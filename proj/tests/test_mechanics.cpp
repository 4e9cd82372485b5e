#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>

#include "optomech/mechanics.hpp"
#include "optomech/mode_shape.hpp"

using namespace optomech;
using Catch::Approx;

namespace {
const MechanicalMode fund{};   // 814 kHz, 190 ng, Q = 1e4
const Environment room{};      // 300 K
}  // namespace

TEST_CASE("susceptibility of the fundamental mode") {
  auto chi_dc = susceptibility(fund, 0.0);
  double k = fund.effective_mass_kg * fund.angular_frequency() * fund.angular_frequency();
  CHECK(std::real(chi_dc) == Approx(1.0 / k).epsilon(1e-12));
  CHECK(std::imag(chi_dc) == 0.0);

  auto chi_res = susceptibility(fund, fund.resonance_frequency_hz);
  CHECK(std::abs(chi_res) == Approx(2.012045754846e-3).epsilon(1e-10));
  // on resonance the response is purely reactive and lags the drive
  CHECK(std::real(chi_res) == Approx(0.0).margin(1e-15));
  CHECK(std::imag(chi_res) < 0.0);

  for (double f : {1e3, 5e5, 814e3, 2e6}) CHECK(std::imag(susceptibility(fund, f)) < 0.0);
  CHECK_THROWS_AS(susceptibility(fund, -1.0), DomainError);
}

TEST_CASE("fluctuation-dissipation force noise") {
  CHECK(thermal_force_psd(fund, room) == Approx(1.609987124685e-24).epsilon(1e-10));
  // linear in temperature, inversely proportional to Q
  Environment cold{30.0};
  CHECK(thermal_force_psd(fund, cold) == Approx(1.609987124685e-25).epsilon(1e-10));
  MechanicalMode stiff = fund;
  stiff.quality_factor = 1e5;
  CHECK(thermal_force_psd(stiff, room) == Approx(1.609987124685e-25).epsilon(1e-10));
}

TEST_CASE("thermal displacement spectrum landmarks") {
  double peak = thermal_displacement_psd_at(fund, room, fund.resonance_frequency_hz);
  CHECK(std::sqrt(peak) == Approx(2.552989649225e-15).epsilon(1e-10));
  CHECK(thermal_peak_asd(fund, room) == Approx(2.552989649225e-15).epsilon(1e-10));
  // far above resonance the spectrum rolls off as f^-4
  CHECK(thermal_displacement_psd_at(fund, room, 1e6) ==
        Approx(2.513594679478e-37).epsilon(1e-10));
  double s8 = thermal_displacement_psd_at(fund, room, 8e6);
  double s16 = thermal_displacement_psd_at(fund, room, 16e6);
  CHECK(s8 / s16 == Approx(16.0).epsilon(0.02));
}

TEST_CASE("equipartition rms displacement") {
  CHECK(rms_displacement(fund, room) == Approx(2.886829901146e-14).epsilon(1e-10));
  double var = rms_displacement(fund, room) * rms_displacement(fund, room);
  CHECK(var == Approx(8.333786878148e-28).epsilon(1e-9));
}

TEST_CASE("spectral integral reproduces the equipartition variance") {
  auto freqs = resonance_grid(fund.resonance_frequency_hz, fund.linewidth_hz(), 1.0, 1e8);
  auto psd = thermal_displacement_psd(fund, room, freqs);
  double var = integrate_psd(psd, freqs.front(), freqs.back());
  CHECK(var == Approx(8.333786878148e-28).epsilon(1e-3));

  // quadrature oracle: quadrupling the grid density moves the result < 0.05%
  auto fine = resonance_grid(fund.resonance_frequency_hz, fund.linewidth_hz(), 1.0, 1e8, 160,
                             300.0, 6000);
  auto psd2 = thermal_displacement_psd(fund, room, fine);
  double var2 = integrate_psd(psd2, fine.front(), fine.back());
  CHECK(var == Approx(var2).epsilon(5e-4));
}

TEST_CASE("driven response on resonance") {
  CHECK(driven_response(fund, 1e-9, fund.resonance_frequency_hz) ==
        Approx(2.012045754846e-12).epsilon(1e-10));
  CHECK(driven_response(fund, 0.0, 814e3) == 0.0);
  CHECK_THROWS_AS(driven_response(fund, -1.0, 814e3), DomainError);
}

TEST_CASE("resonance grid covers its span and resolves the peak") {
  double fm = fund.resonance_frequency_hz, g = fund.linewidth_hz();
  auto f = resonance_grid(fm, g, 10.0, 1e7);
  CHECK(f.front() == 10.0);
  CHECK(f.back() == 1e7);
  for (std::size_t i = 1; i < f.size(); ++i) REQUIRE(f[i] > f[i - 1]);
  // inside +-1 linewidth the spacing must resolve gamma/40
  for (std::size_t i = 1; i < f.size(); ++i)
    if (f[i] > fm - g && f[i] < fm + g) CHECK(f[i] - f[i - 1] <= g / 40.0 * 1.0001);
  CHECK_THROWS_AS(resonance_grid(fm, g, -1.0, 1e7), DomainError);
  CHECK_THROWS_AS(resonance_grid(fm, 0.0, 1.0, 1e7), DomainError);
}

TEST_CASE("mode validation") {
  MechanicalMode bad = fund;
  bad.effective_mass_kg = 0.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = fund;
  bad.quality_factor = -1.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  CHECK_THROWS_AS(Environment{0.0}.validate(), DomainError);
}

TEST_CASE("clamped beam profiles satisfy the clamped boundary conditions") {
  for (std::size_t n = 1; n <= 10; ++n) {
    auto shape = clamped_beam_mode_shape(n, 1e-3, 1e-3, 0.14, 2001, 3);
    const auto& xs = shape.x();
    std::size_t nx = xs.size();
    // displacement pinned at both clamps
    CHECK(std::abs(shape.at(0, 1)) < 1e-12);
    CHECK(std::abs(shape.at(nx - 1, 1)) < 1e-9);
    // slope vanishes at the clamps: u grows quadratically, u(2h)/u(h) -> 4
    CHECK(shape.at(2, 1) / shape.at(1, 1) == Approx(4.0).epsilon(0.05));
    CHECK(shape.at(nx - 3, 1) / shape.at(nx - 2, 1) == Approx(4.0).epsilon(0.05));
    // normalized to unit peak
    double peak = 0.0;
    for (std::size_t i = 0; i < nx; ++i) peak = std::max(peak, std::abs(shape.at(i, 1)));
    CHECK(peak == Approx(1.0).epsilon(1e-12));
    // mode n has n antinodes, so n-1 interior zero crossings
    int crossings = 0;
    double prev_sign = 0.0;
    for (std::size_t i = 1; i + 1 < nx; ++i) {
      double u = shape.at(i, 1);
      if (std::abs(u) < 1e-9) continue;  // skip samples landing on a node
      double sign = u > 0.0 ? 1.0 : -1.0;
      if (prev_sign != 0.0 && sign != prev_sign) ++crossings;
      prev_sign = sign;
    }
    CHECK(crossings == static_cast<int>(n) - 1);
  }
}

TEST_CASE("clamped beam eigenfunctions are orthogonal") {
  auto m1 = clamped_beam_mode_shape(1, 1e-3, 1e-3, 0.14, 4001, 2);
  auto m2 = clamped_beam_mode_shape(2, 1e-3, 1e-3, 0.14, 4001, 2);
  auto m3 = clamped_beam_mode_shape(3, 1e-3, 1e-3, 0.14, 4001, 2);
  auto inner = [](const ModeShape& a, const ModeShape& b) {
    double acc = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.x().size(); ++i) {
      acc += a.at(i, 0) * b.at(i, 0);
      na += a.at(i, 0) * a.at(i, 0);
      nb += b.at(i, 0) * b.at(i, 0);
    }
    return acc / std::sqrt(na * nb);
  };
  CHECK(std::abs(inner(m1, m2)) < 1e-6);
  CHECK(std::abs(inner(m1, m3)) < 1e-6);
  CHECK(std::abs(inner(m2, m3)) < 1e-6);
}

TEST_CASE("effective mass seen by a centered spot") {
  auto shape = clamped_beam_mode_shape(1, 1e-3, 1e-3, 0.13974, 201, 65);
  auto m = effective_mass_at_spot(shape, {0.5e-3, 0.5e-3, 60e-6});
  CHECK(!m.is_infinite());
  CHECK(m.mass_kg > 0.0);
  CHECK(m.spot_capture == Approx(1.0).epsilon(1e-6));
  CHECK(!m.edge_warning);

  // 4x refined lattice agrees within 1%
  auto fine = clamped_beam_mode_shape(1, 1e-3, 1e-3, 0.13974, 801, 257);
  auto mf = effective_mass_at_spot(fine, {0.5e-3, 0.5e-3, 60e-6});
  CHECK(m.mass_kg == Approx(mf.mass_kg).epsilon(0.01));

  // a small spot at the antinode sees roughly rho * integral(u^2) / u(x0)^2;
  // for larger spots the overlap drops and the mass grows
  auto big = effective_mass_at_spot(shape, {0.5e-3, 0.5e-3, 200e-6});
  CHECK(big.mass_kg > m.mass_kg);
}

TEST_CASE("spot on a node reads infinite mass, zero scan level") {
  auto mode2 = clamped_beam_mode_shape(2, 1e-3, 1e-3, 0.13974, 401, 65);
  // mode 2 is antisymmetric: exact node at the center
  auto m = effective_mass_at_spot(mode2, {0.5e-3, 0.5e-3, 30e-6});
  CHECK(m.is_infinite());

  auto scan = overlap_scan(mode2, 30e-6, {0.25e-3, 0.5e-3, 0.75e-3});
  CHECK(scan[1].relative_level == 0.0);
  CHECK(scan[0].relative_level > 0.0);
}

TEST_CASE("overlap scan is symmetric and normalized") {
  auto shape = clamped_beam_mode_shape(1, 1e-3, 1e-3, 0.13974, 201, 65);
  std::vector<double> pos(101);
  for (std::size_t i = 0; i < pos.size(); ++i)
    pos[i] = 1e-3 * static_cast<double>(i) / static_cast<double>(pos.size() - 1);
  auto scan = overlap_scan(shape, 60e-6, pos);
  double level_max = 0.0;
  for (const auto& p : scan) level_max = std::max(level_max, p.relative_level);
  CHECK(level_max == Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 0; i < scan.size(); ++i)
    CHECK(scan[i].relative_level ==
          Approx(scan[scan.size() - 1 - i].relative_level).margin(1e-9));
  CHECK_THROWS_AS(overlap_scan(shape, 60e-6, {}), DomainError);
}

TEST_CASE("spot outside the lattice or hanging off the edge") {
  auto shape = clamped_beam_mode_shape(1, 1e-3, 1e-3, 0.13974, 201, 65);
  CHECK_THROWS_AS(effective_mass_at_spot(shape, {-1e-6, 0.5e-3, 60e-6}), DomainError);
  auto edge = effective_mass_at_spot(shape, {1e-5, 0.5e-3, 60e-6});
  CHECK(edge.edge_warning);  // much of the Gaussian falls outside the beam
  CHECK(edge.spot_capture < 0.99);
}

TEST_CASE("mode shape CSV round trip") {
  auto dir = std::filesystem::temp_directory_path() / "optomech_test_modeshape";
  std::filesystem::create_directories(dir);
  auto path = (dir / "shape.csv").string();

  auto shape = clamped_beam_mode_shape(2, 1e-3, 0.5e-3, 0.13974, 41, 9);
  save_mode_shape_csv(shape, path);
  auto back = load_mode_shape_csv(path);
  REQUIRE(back.x().size() == 41);
  REQUIRE(back.y().size() == 9);
  CHECK(back.areal_density() == Approx(0.13974).epsilon(1e-12));
  for (std::size_t j = 0; j < 9; ++j)
    for (std::size_t i = 0; i < 41; ++i)
      CHECK(back.at(i, j) == Approx(shape.at(i, j)).margin(1e-12));

  SECTION("incomplete lattice is rejected") {
    std::ofstream out(path);
    out << "# areal_density_kg_m2=0.1\nx_m,y_m,u\n0,0,1\n1,0,2\n0,1,3\n";
    out.close();
    CHECK_THROWS_AS(load_mode_shape_csv(path), IoError);
  }
  SECTION("missing density header is rejected") {
    std::ofstream out(path);
    out << "x_m,y_m,u\n0,0,1\n1,0,2\n0,1,3\n1,1,4\n";
    out.close();
    CHECK_THROWS_AS(load_mode_shape_csv(path), IoError);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("mode table CSV") {
  auto dir = std::filesystem::temp_directory_path() / "optomech_test_modetable";
  std::filesystem::create_directories(dir);
  auto path = (dir / "modes.csv").string();
  {
    std::ofstream out(path);
    out << "label,f_m_hz,m_eff_kg,q,fem_f_hz,fem_m_kg\n";
    out << "fundamental,814e3,190e-9,1e4,890e3,130e-9\n";
    out << "drum2,1.57e6,220e-9,8000,0,0\n";
  }
  auto modes = load_mode_table_csv(path);
  REQUIRE(modes.size() == 2);
  CHECK(modes[0].label == "fundamental");
  CHECK(modes[0].resonance_frequency_hz == 814e3);
  CHECK(modes[0].fem_mass_kg == 130e-9);
  CHECK(modes[1].quality_factor == 8000.0);

  std::ofstream out(path);
  out << "label,f_m_hz,m_eff_kg,q,fem_f_hz,fem_m_kg\nbad,1,2\n";
  out.close();
  CHECK_THROWS_AS(load_mode_table_csv(path), IoError);
  std::filesystem::remove_all(dir);
}
