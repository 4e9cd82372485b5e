#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "optomech/fitting.hpp"
#include "optomech/mechanics.hpp"
#include "optomech/signal.hpp"
#include "optomech/spectrum.hpp"
#include "optomech/welch.hpp"

using namespace optomech;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

// Flat one-sided PSD covering [f_lo, f_hi].
NoiseSpectrum flat_psd(double level, double f_lo, double f_hi) {
  return NoiseSpectrum({f_lo, f_hi}, {level, level}, displacement_psd);
}

TimeSeries tone(double rms_amplitude_m, double f0_hz, double fs_hz, std::size_t n) {
  TimeSeries ts{fs_hz, std::vector<double>(n), 0};
  double a = rms_amplitude_m * std::sqrt(2.0);
  for (std::size_t i = 0; i < n; ++i)
    ts.samples[i] = a * std::sin(2.0 * M_PI * f0_hz * static_cast<double>(i) / fs_hz);
  return ts;
}

double lorentzian(double f, double f0, double w, double p, double b) {
  double u = 2.0 * (f - f0) / w;
  return b + p / (1.0 + u * u);
}

}  // namespace

TEST_CASE("periodic hann window has ENBW of exactly 1.5 bins") {
  std::size_t n = 1024;
  auto w = hann_window(n);
  REQUIRE(w.size() == n);
  CHECK(w[0] == 0.0);
  CHECK(w[n / 2] == Approx(1.0).epsilon(1e-12));

  // coherent gain sum(w) = n/2, power sum(w^2) = 3n/8, both exact identities
  double s1 = 0.0, s2 = 0.0;
  for (double v : w) {
    s1 += v;
    s2 += v * v;
  }
  CHECK(s1 == Approx(static_cast<double>(n) / 2.0).epsilon(1e-12));
  CHECK(s2 == Approx(3.0 * static_cast<double>(n) / 8.0).epsilon(1e-12));
  CHECK(static_cast<double>(n) * s2 / (s1 * s1) == Approx(1.5).epsilon(1e-12));

  CHECK_THROWS_AS(hann_window(1), DomainError);
}

TEST_CASE("welch segmentation bookkeeping") {
  TimeSeries quiet{1024.0, std::vector<double>(4500, 0.0), 0};
  auto ws = welch_psd(quiet, 1.0);
  CHECK(ws.segment_length == 1024);
  CHECK(ws.n_averages == 7);  // (4500 - 1024) / 512 + 1
  CHECK(ws.rbw_hz == Approx(1.0).epsilon(1e-15));
  CHECK(ws.enbw_hz == Approx(1.5).epsilon(1e-15));
  CHECK(ws.sample_rate_hz == 1024.0);
  REQUIRE(ws.psd.size() == 513);
  CHECK(ws.psd.frequencies().front() == 0.0);
  CHECK(ws.psd.frequencies()[1] == Approx(1.0).epsilon(1e-15));
  CHECK(ws.psd.frequencies().back() == Approx(512.0).epsilon(1e-15));
  CHECK(ws.psd.unit() == displacement_psd);
  for (double v : ws.psd.values()) CHECK(v == 0.0);

  CHECK_THROWS_WITH(welch_psd(TimeSeries{1e4, std::vector<double>(500), 0}, 10.0),
                    ContainsSubstring("record shorter"));
  CHECK_THROWS_WITH(welch_psd(quiet, 500.0), ContainsSubstring("RBW too large"));
  CHECK_THROWS_AS(welch_psd(quiet, -1.0), DomainError);
  CHECK_THROWS_AS(welch_psd(quiet, 1.0, SpectrumUnit{Quantity::displacement, Density::amplitude}),
                  UnitError);
}

TEST_CASE("synthesized white noise reads back flat at the model level") {
  double s0 = 2.5e-24;
  auto model = flat_psd(s0, 1.0, 5000.0);
  auto ts = synthesize_timeseries(model, 1e4, 20.0, 42);
  REQUIRE(ts.samples.size() == 200000);
  CHECK(ts.duration_s() == Approx(20.0).epsilon(1e-15));

  // Parseval: the record's mean square equals the integrated model PSD
  double ms = 0.0;
  for (double x : ts.samples) ms += x * x;
  ms /= static_cast<double>(ts.samples.size());
  CHECK(ms == Approx(s0 * 5000.0).epsilon(0.03));

  auto ws = welch_psd(ts, 10.0);
  CHECK(ws.n_averages == 399);
  std::size_t n_bins = ws.psd.size();
  double mean = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 2; k + 2 < n_bins; ++k) {
    double v = ws.psd.values()[k];
    CHECK(v == Approx(s0).epsilon(0.35));  // single bin, chi-squared scatter
    mean += v;
    ++count;
  }
  mean /= static_cast<double>(count);
  CHECK(mean == Approx(s0).epsilon(0.02));
}

TEST_CASE("a bin-centered tone integrates to its mean-square amplitude") {
  double a = 3e-9;           // rms amplitude
  double f0 = 250.0;         // exact bin center at 10 Hz RBW
  auto ts = tone(a, f0, 1e4, 100000);

  double ms = 0.0;
  for (double x : ts.samples) ms += x * x;
  ms /= static_cast<double>(ts.samples.size());
  CHECK(ms == Approx(a * a).epsilon(1e-6));  // 2500 whole cycles in the record

  auto ws = welch_psd(ts, 10.0);
  CHECK(ws.n_averages == 199);
  // periodic Hann leaks into exactly one bin either side; +-10 bins is plenty
  CHECK(integrate_psd(ws.psd, f0 - 100.0, f0 + 100.0) == Approx(a * a).epsilon(1e-6));
  // peak bin times ENBW recovers the tone power as well
  CHECK(ws.psd.value_at(f0) * ws.enbw_hz == Approx(a * a).epsilon(1e-6));
  // and the neighbors hold half the power in total
  CHECK(ws.psd.value_at(f0 - 10.0) == Approx(ws.psd.value_at(f0) / 4.0).epsilon(1e-6));
}

TEST_CASE("synthesis is deterministic in the seed") {
  auto model = flat_psd(1e-24, 1.0, 500.0);
  auto a = synthesize_timeseries(model, 1e3, 0.5, 7);
  auto b = synthesize_timeseries(model, 1e3, 0.5, 7);
  auto c = synthesize_timeseries(model, 1e3, 0.5, 8);
  REQUIRE(a.samples.size() == b.samples.size());
  CHECK(std::equal(a.samples.begin(), a.samples.end(), b.samples.begin()));
  CHECK(!std::equal(a.samples.begin(), a.samples.end(), c.samples.begin()));
  CHECK(a.seed == 7);

  CHECK_THROWS_AS(synthesize_timeseries(model, 1e3, 2e-3, 0), DomainError);
  CHECK_THROWS_AS(synthesize_timeseries(model, 2e3, 0.5, 0), DomainError);  // Nyquist uncovered
  auto asd = asd_from_psd(model);
  CHECK_THROWS_AS(synthesize_timeseries(asd, 1e3, 0.5, 0), UnitError);
}

TEST_CASE("time series round trip through the binary record") {
  auto dir = std::filesystem::temp_directory_path() / "optomech_test_dsp";
  std::filesystem::create_directories(dir);
  auto path = (dir / "trace.bin").string();

  auto ts = synthesize_timeseries(flat_psd(1e-24, 1.0, 500.0), 1e3, 0.5, 77);
  save_timeseries(ts, path);
  auto back = load_timeseries(path);
  CHECK(back.sample_rate_hz == ts.sample_rate_hz);
  CHECK(back.seed == 77);
  REQUIRE(back.samples.size() == ts.samples.size());
  CHECK(std::equal(ts.samples.begin(), ts.samples.end(), back.samples.begin()));

  SECTION("truncated sample block is rejected") {
    auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size - 8 * ts.samples.size() / 2);
    CHECK_THROWS_WITH(load_timeseries(path), ContainsSubstring("truncated"));
  }
  SECTION("foreign header is rejected") {
    std::ofstream(path, std::ios::trunc) << "bogus header\n";
    CHECK_THROWS_WITH(load_timeseries(path), ContainsSubstring("header"));
  }
  SECTION("missing file and unwritable path are IO errors") {
    CHECK_THROWS_AS(load_timeseries((dir / "absent.bin").string()), IoError);
    CHECK_THROWS_AS(save_timeseries(ts, (dir / "no_such_dir" / "x.bin").string()), IoError);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("window power kernel is a centered unit-mass smoother") {
  TimeSeries quiet{1e4, std::vector<double>(20000, 0.0), 0};
  auto ws = welch_psd(quiet, 10.0);
  auto kernel = window_power_kernel(ws);

  REQUIRE(kernel.half_taps == 32);  // 4 bins x 8 sub-samples
  REQUIRE(kernel.weights.size() == 65);
  CHECK(kernel.offset_step_hz == Approx(10.0 / 8.0).epsilon(1e-15));
  CHECK(kernel.offset(32) == 0.0);
  CHECK(kernel.offset(0) == Approx(-40.0).epsilon(1e-15));
  CHECK(kernel.offset(64) == Approx(40.0).epsilon(1e-15));

  double total = 0.0;
  for (double k : kernel.weights) total += k;
  CHECK(total == Approx(1.0).epsilon(1e-12));
  for (std::size_t j = 0; j < kernel.weights.size(); ++j)
    CHECK(kernel.weights[j] == kernel.weights[kernel.weights.size() - 1 - j]);
  std::size_t mid = 32;
  CHECK(kernel.weights[mid] > kernel.weights[mid - 1]);
  // far tap sits on the -47 dB Hann sidelobe skirt
  CHECK(kernel.weights.front() < 1e-3 * kernel.weights[mid]);
}

TEST_CASE("fit recovers exact lorentzian parameters from noise-free data") {
  double f0 = 1000.0, w = 10.0, p = 1e-12, b = 1e-16;
  std::vector<double> f, y;
  for (double fi = 900.0; fi <= 1100.0 + 1e-9; fi += 0.5) {
    f.push_back(fi);
    y.push_back(lorentzian(fi, f0, w, p, b));
  }
  NoiseSpectrum s(std::move(f), std::move(y), displacement_psd);
  Environment room;
  auto fit = fit_lorentzian(s, 900.0, 1100.0, room);
  CHECK(fit.center_frequency_hz == Approx(f0).epsilon(1e-9));
  CHECK(fit.linewidth_fwhm_hz == Approx(w).epsilon(1e-7));
  CHECK(fit.peak_psd == Approx(p).epsilon(1e-7));
  CHECK(fit.background_psd == Approx(b).epsilon(1e-3));
  CHECK(fit.derived_q == Approx(f0 / w).epsilon(1e-7));
  CHECK(fit.area_m2 == Approx(p * w * M_PI / 2.0).epsilon(1e-7));
  CHECK(fit.residual_norm < 1e-6);
  CHECK(fit.iterations < 300);
}

TEST_CASE("damped oscillator fit matches the thermal curve exactly") {
  MechanicalMode fund;
  Environment room;
  double gamma_hz = fund.linewidth_hz();
  std::vector<double> f;
  for (double fi = fund.resonance_frequency_hz - 30.0 * gamma_hz;
       fi <= fund.resonance_frequency_hz + 30.0 * gamma_hz + 1e-9; fi += gamma_hz / 25.0)
    f.push_back(fi);
  auto curve = thermal_displacement_psd(fund, room, f);

  FitOptions opt;
  opt.shape = FitShape::damped_oscillator;
  auto fit = fit_lorentzian(curve, curve.f_min(), curve.f_max(), room, opt);
  CHECK(fit.center_frequency_hz == Approx(fund.resonance_frequency_hz).epsilon(1e-10));
  CHECK(fit.linewidth_fwhm_hz == Approx(gamma_hz).epsilon(1e-8));
  CHECK(fit.peak_psd ==
        Approx(thermal_displacement_psd_at(fund, room, fund.resonance_frequency_hz))
            .epsilon(1e-7));
  CHECK(std::abs(fit.background_psd) < 1e-6 * fit.peak_psd);
  // p w pi / 2 is the exact 0..inf area for this shape at any damping, so the
  // equipartition readbacks are exact too
  CHECK(equipartition_temperature(fit, fund.effective_mass_kg) == Approx(300.0).epsilon(1e-6));
  CHECK(fit.derived_mass_kg == Approx(fund.effective_mass_kg).epsilon(1e-6));
}

TEST_CASE("welch estimate of a synthesized resonance fits back to the model") {
  MechanicalMode fund;
  Environment room;
  double fm = fund.resonance_frequency_hz;
  double gamma_hz = fund.linewidth_hz();
  auto freqs = resonance_grid(fm, gamma_hz, 100.0, 1e6);
  auto model = thermal_displacement_psd(fund, room, freqs);

  // 818 averages put the statistical width scatter near 1.8% (1/sqrt(T Gamma))
  auto ts = synthesize_timeseries(model, 2e6, 20.48, 11);
  auto ws = welch_psd(ts, 20.0);
  REQUIRE(ws.n_averages == 818);

  double half_window = 10.0 * std::max(gamma_hz, ws.enbw_hz);
  auto fit = fit_lorentzian(ws, fm - half_window, fm + half_window, room);
  CHECK(fit.center_frequency_hz == Approx(fm).epsilon(1e-5));
  CHECK(fit.linewidth_fwhm_hz == Approx(gamma_hz).epsilon(0.03));
  CHECK(fit.derived_q == Approx(fund.quality_factor).epsilon(0.03));
  CHECK(fit.derived_mass_kg == Approx(fund.effective_mass_kg).epsilon(0.03));
  CHECK(equipartition_temperature(fit, fund.effective_mass_kg) == Approx(300.0).epsilon(0.03));

  // ignoring the window kernel widens the fitted line by ~1.4% at 20 Hz RBW
  auto naive = fit_lorentzian(ws.psd, fm - half_window, fm + half_window, room);
  CHECK(naive.linewidth_fwhm_hz > 1.01 * fit.linewidth_fwhm_hz);
}

TEST_CASE("fit failure modes are reported, not papered over") {
  Environment room;

  SECTION("flat spectrum has no resolvable peak") {
    std::vector<double> f, y;
    for (int i = 0; i <= 100; ++i) {
      f.push_back(100.0 + i);
      y.push_back(1e-15);
    }
    NoiseSpectrum s(std::move(f), std::move(y), displacement_psd);
    CHECK_THROWS_MATCHES(fit_lorentzian(s, 100.0, 200.0, room), FitError,
                         Catch::Matchers::MessageMatches(ContainsSubstring("no resolvable peak")));
  }

  SECTION("two peaks in one window are refused") {
    std::vector<double> f, y;
    for (int i = 0; i <= 4000; ++i) {
      double fi = static_cast<double>(i);
      f.push_back(fi);
      y.push_back(lorentzian(fi, 1000.0, 10.0, 1.0, 1e-16) +
                  lorentzian(fi, 3000.0, 10.0, 0.9, 0.0));
    }
    NoiseSpectrum s(f, y, displacement_psd);
    CHECK_THROWS_MATCHES(fit_lorentzian(s, 0.0, 4000.0, room), FitError,
                         Catch::Matchers::MessageMatches(ContainsSubstring("multiple peaks")));
    SECTION("a window isolating one of them fits fine") {
      // the neighbor's tail is a sloped background; it pulls the center a hair
      auto fit = fit_lorentzian(s, 500.0, 1500.0, room);
      CHECK(fit.center_frequency_hz == Approx(1000.0).epsilon(1e-4));
    }
    SECTION("a window with too few bins is a domain error") {
      CHECK_THROWS_WITH(fit_lorentzian(s, 999.0, 1003.0, room),
                        ContainsSubstring("points in window"));
    }
  }

  SECTION("window bounds must be ordered") {
    NoiseSpectrum s({1.0, 2.0}, {1.0, 1.0}, displacement_psd);
    CHECK_THROWS_AS(fit_lorentzian(s, 2.0, 1.0, room), DomainError);
  }

  SECTION("equipartition readback rejects bad inputs") {
    LorentzianFit fit;
    fit.center_frequency_hz = 1000.0;
    fit.area_m2 = -1e-30;
    CHECK_THROWS_AS(equipartition_temperature(fit, 1e-9), FitError);
    fit.area_m2 = 1e-30;
    CHECK_THROWS_AS(equipartition_temperature(fit, -1e-9), DomainError);
    CHECK(equipartition_temperature(fit, 1e-9) > 0.0);
  }
}
