#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "optomech/csv.hpp"
#include "optomech/spectrum.hpp"

using namespace optomech;
using Catch::Approx;

TEST_CASE("spectrum construction enforces invariants") {
  CHECK_THROWS_AS(NoiseSpectrum({1.0, 2.0}, {1.0}, displacement_psd), DomainError);
  CHECK_THROWS_AS(NoiseSpectrum({1.0}, {1.0}, displacement_psd), DomainError);
  CHECK_THROWS_AS(NoiseSpectrum({2.0, 1.0}, {1.0, 1.0}, displacement_psd), DomainError);
  CHECK_THROWS_AS(NoiseSpectrum({1.0, 1.0}, {1.0, 1.0}, displacement_psd), DomainError);
  CHECK_THROWS_AS(NoiseSpectrum({1.0, 2.0}, {1.0, -1.0}, displacement_psd), DomainError);
  CHECK_NOTHROW(NoiseSpectrum({0.0, 2.0}, {0.0, 1.0}, displacement_psd));
}

TEST_CASE("value_at interpolates linearly and refuses extrapolation") {
  NoiseSpectrum s({1.0, 3.0, 5.0}, {10.0, 30.0, 10.0}, displacement_psd);
  CHECK(s.value_at(1.0) == 10.0);
  CHECK(s.value_at(5.0) == 10.0);
  CHECK(s.value_at(2.0) == Approx(20.0));
  CHECK(s.value_at(4.0) == Approx(20.0));
  CHECK(s.value_at(3.0) == 30.0);
  CHECK_THROWS_AS(s.value_at(0.999), DomainError);
  CHECK_THROWS_AS(s.value_at(5.001), DomainError);
}

TEST_CASE("integrate_psd is exact for piecewise-linear spectra") {
  NoiseSpectrum flat({0.0, 10.0}, {2.0, 2.0}, displacement_psd);
  CHECK(integrate_psd(flat, 0.0, 10.0) == Approx(20.0).epsilon(1e-14));
  CHECK(integrate_psd(flat, 2.5, 7.5) == Approx(10.0).epsilon(1e-14));
  CHECK(integrate_psd(flat, 4.0, 4.0) == 0.0);

  // triangle: area under {0,0} -> {5,10} -> {10,0}
  NoiseSpectrum tri({0.0, 5.0, 10.0}, {0.0, 10.0, 0.0}, displacement_psd);
  CHECK(integrate_psd(tri, 0.0, 10.0) == Approx(50.0).epsilon(1e-14));
  CHECK(integrate_psd(tri, 2.5, 5.0) == Approx(0.5 * (5.0 + 10.0) * 2.5).epsilon(1e-14));

  CHECK_THROWS_AS(integrate_psd(flat, -1.0, 5.0), DomainError);
  CHECK_THROWS_AS(integrate_psd(flat, 5.0, 11.0), DomainError);
  CHECK_THROWS_AS(integrate_psd(flat, 7.0, 3.0), DomainError);
  CHECK_THROWS_AS(integrate_psd(asd_from_psd(flat), 0.0, 10.0), UnitError);
}

TEST_CASE("asd_from_psd takes the square root and switches the unit tag") {
  NoiseSpectrum psd({1.0, 2.0}, {4.0, 9.0}, displacement_psd);
  auto asd = asd_from_psd(psd);
  CHECK(asd.values()[0] == 2.0);
  CHECK(asd.values()[1] == 3.0);
  CHECK(asd.unit().density == Density::amplitude);
  CHECK(to_string(asd.unit()) == "m/rtHz");
  CHECK_THROWS_AS(asd_from_psd(asd), UnitError);
}

TEST_CASE("spectrum arithmetic checks units and grids") {
  NoiseSpectrum a({1.0, 2.0}, {1.0, 2.0}, displacement_psd);
  NoiseSpectrum b({1.0, 2.0}, {3.0, 4.0}, displacement_psd);
  auto sum = a + b;
  CHECK(sum.values()[0] == 4.0);
  CHECK(sum.values()[1] == 6.0);

  NoiseSpectrum other_unit({1.0, 2.0}, {1.0, 1.0}, force_psd);
  CHECK_THROWS_AS(a + other_unit, UnitError);
  NoiseSpectrum other_grid({1.0, 3.0}, {1.0, 1.0}, displacement_psd);
  CHECK_THROWS_AS(a + other_grid, DomainError);

  auto scaled = a * 2.5;
  CHECK(scaled.values()[1] == 5.0);
  CHECK_THROWS_AS(a * -1.0, DomainError);
}

TEST_CASE("unit tags round-trip through their string form") {
  for (Quantity q : {Quantity::displacement, Quantity::force, Quantity::frequency,
                     Quantity::dimensionless})
    for (Density d : {Density::power, Density::amplitude}) {
      SpectrumUnit u{q, d};
      CHECK(unit_from_string(to_string(u)) == u);
    }
  CHECK_THROWS_AS(unit_from_string("furlongs^2/Hz"), UnitError);
}

TEST_CASE("frequency grids hit both endpoints exactly") {
  FrequencyGrid lin{1e3, 1e6, 100, FrequencyGrid::Spacing::linear};
  auto fl = lin.frequencies();
  REQUIRE(fl.size() == 100);
  CHECK(fl.front() == 1e3);
  CHECK(fl.back() == 1e6);

  FrequencyGrid log{1e3, 1e6, 100, FrequencyGrid::Spacing::logarithmic};
  auto fg = log.frequencies();
  CHECK(fg.front() == 1e3);
  CHECK(fg.back() == 1e6);
  // log spacing: constant ratio between neighbors
  double r0 = fg[1] / fg[0], r1 = fg[51] / fg[50];
  CHECK(r0 == Approx(r1).epsilon(1e-12));
  for (std::size_t i = 1; i < fg.size(); ++i) CHECK(fg[i] > fg[i - 1]);

  CHECK_THROWS_AS((FrequencyGrid{1e3, 1e6, 1, FrequencyGrid::Spacing::linear}.validate()),
                  DomainError);
  CHECK_THROWS_AS((FrequencyGrid{1e6, 1e3, 10, FrequencyGrid::Spacing::linear}.validate()),
                  DomainError);
  CHECK_THROWS_AS((FrequencyGrid{0.0, 1e6, 10, FrequencyGrid::Spacing::logarithmic}.validate()),
                  DomainError);
  CHECK_NOTHROW((FrequencyGrid{0.0, 1e6, 10, FrequencyGrid::Spacing::linear}.validate()));
}

TEST_CASE("spectrum CSV files round-trip") {
  auto dir = std::filesystem::temp_directory_path() / "optomech_test_spectrum";
  std::filesystem::create_directories(dir);
  auto path = (dir / "s.csv").string();

  NoiseSpectrum s({1.0, 10.0, 100.0}, {1e-30, 2e-31, 3e-32}, displacement_psd);
  save_spectrum_csv(s, path);
  auto back = load_spectrum_csv(path);
  REQUIRE(back.size() == 3);
  CHECK(back.unit() == displacement_psd);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.frequencies()[i] == Approx(s.frequencies()[i]).epsilon(1e-12));
    CHECK(back.values()[i] == Approx(s.values()[i]).epsilon(1e-12));
  }

  SECTION("missing unit header is rejected") {
    std::ofstream out(path);
    out << "frequency_hz,value\n1,2\n3,4\n";
    out.close();
    CHECK_THROWS_AS(load_spectrum_csv(path), IoError);
  }
  SECTION("two-sided spectra are rejected") {
    std::ofstream out(path);
    out << "# unit=m^2/Hz sidedness=two\n1,2\n3,4\n";
    out.close();
    CHECK_THROWS_AS(load_spectrum_csv(path), IoError);
  }
  SECTION("junk values are rejected") {
    std::ofstream out(path);
    out << "# unit=m^2/Hz sidedness=one\n1,2\n3,banana\n";
    out.close();
    CHECK_THROWS_AS(load_spectrum_csv(path), IoError);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("tabulate evaluates a function on the grid") {
  auto s = tabulate({1.0, 2.0, 3.0}, force_psd, [](double f) { return f * f; });
  CHECK(s.values()[2] == 9.0);
  CHECK(s.unit() == force_psd);
}
