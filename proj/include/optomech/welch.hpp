#pragma once

#include <cmath>
#include <complex>
#include <cstring>
#include <memory>
#include <vector>

#include "optomech/detail/fft.hpp"
#include "optomech/errors.hpp"
#include "optomech/signal.hpp"
#include "optomech/spectrum.hpp"

namespace optomech {

// Periodic Hann window; ENBW is exactly 1.5 bins.
inline std::vector<double> hann_window(std::size_t n) {
  if (n < 2) throw DomainError("hann_window: need n >= 2");
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n)));
  return w;
}

// A Welch PSD estimate plus the estimator metadata a fit needs to undo the
// spectral leakage of the window.
struct WelchSpectrum {
  NoiseSpectrum psd;
  double rbw_hz = 0.0;   // bin spacing fs/segment_length
  double enbw_hz = 0.0;  // equivalent noise bandwidth, 1.5 * rbw for Hann
  double sample_rate_hz = 0.0;
  std::size_t segment_length = 0;
  std::size_t n_averages = 0;
};

// Averaged periodogram: Hann window, 50% overlap, segment length chosen so
// the bin spacing equals the requested resolution bandwidth. Normalized so
// white noise of PSD s0 reads s0 and a sinusoid of rms amplitude a
// integrates to a^2 across its peak.
inline WelchSpectrum welch_psd(const TimeSeries& series, double resolution_bandwidth_hz,
                               SpectrumUnit unit = displacement_psd) {
  if (!(series.sample_rate_hz > 0.0)) throw DomainError("welch: invalid sample rate");
  if (!(resolution_bandwidth_hz > 0.0)) throw DomainError("welch: RBW must be positive");
  std::size_t n =
      2 * static_cast<std::size_t>(std::llround(series.sample_rate_hz /
                                                resolution_bandwidth_hz / 2.0));
  if (n < 4) throw DomainError("welch: RBW too large for the sample rate");
  if (series.samples.size() < n)
    throw DomainError("welch: record shorter than one segment (" + std::to_string(n) +
                      " samples needed)");
  if (unit.density != Density::power) throw UnitError("welch: output unit must be a PSD");

  std::vector<double> window = hann_window(n);
  double window_power = 0.0;
  for (double w : window) window_power += w * w;

  std::size_t hop = n / 2;
  std::size_t n_avg = (series.samples.size() - n) / hop + 1;
  std::size_t n_bins = n / 2 + 1;

  detail::FftwFree free_fn;
  std::unique_ptr<double, detail::FftwFree> in(fftw_alloc_real(n), free_fn);
  std::unique_ptr<fftw_complex, detail::FftwFree> out(fftw_alloc_complex(n_bins), free_fn);
  if (!in || !out) throw Error("welch: allocation failed");
  detail::FftwPlan plan(
      fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
  if (!plan) throw Error("welch: plan creation failed");

  std::vector<double> acc(n_bins, 0.0);
  for (std::size_t s = 0; s < n_avg; ++s) {
    const double* seg = series.samples.data() + s * hop;
    for (std::size_t i = 0; i < n; ++i) in.get()[i] = seg[i] * window[i];
    fftw_execute(plan.get());
    for (std::size_t k = 0; k < n_bins; ++k) {
      double re = out.get()[k][0], im = out.get()[k][1];
      acc[k] += re * re + im * im;
    }
  }

  double norm = 1.0 / (series.sample_rate_hz * window_power * static_cast<double>(n_avg));
  std::vector<double> psd(n_bins), freqs(n_bins);
  double df = series.sample_rate_hz / static_cast<double>(n);
  for (std::size_t k = 0; k < n_bins; ++k) {
    double one_sided = (k == 0 || k == n_bins - 1) ? 1.0 : 2.0;
    psd[k] = one_sided * acc[k] * norm;
    freqs[k] = df * static_cast<double>(k);
  }
  WelchSpectrum result{NoiseSpectrum(std::move(freqs), std::move(psd), unit),
                       df,
                       1.5 * df,
                       series.sample_rate_hz,
                       n,
                       n_avg};
  return result;
}

// The window's power response |W(phi)|^2 sampled at sub-bin offsets,
// normalized to unit discrete integral: the Welch estimate of a narrow line
// is the true PSD convolved with this kernel, so a fit that ignores it
// overestimates the linewidth by roughly the ENBW.
struct SpectralKernel {
  double offset_step_hz = 0.0;       // spacing between taps
  std::vector<double> weights;       // centered, odd length, sums to 1
  int half_taps = 0;

  double offset(std::size_t j) const {
    return (static_cast<double>(j) - half_taps) * offset_step_hz;
  }
};

inline SpectralKernel window_power_kernel(const WelchSpectrum& ws, std::size_t sub = 8,
                                          std::size_t half_bins = 4) {
  if (ws.segment_length == 0) throw DomainError("kernel: missing Welch metadata");
  std::size_t n = ws.segment_length;
  std::size_t padded = n * sub;
  std::vector<double> w = hann_window(n);
  w.resize(padded, 0.0);
  auto spectrum = detail::real_fft(w);

  int half = static_cast<int>(half_bins * sub);
  SpectralKernel kernel;
  kernel.offset_step_hz = ws.rbw_hz / static_cast<double>(sub);
  kernel.half_taps = half;
  kernel.weights.resize(2 * half + 1);
  double total = 0.0;
  for (int j = -half; j <= half; ++j) {
    // |W| is even in the offset for the real window, so negative offsets
    // reuse the positive-frequency bins.
    double mag = std::abs(spectrum[static_cast<std::size_t>(std::abs(j))]);
    kernel.weights[static_cast<std::size_t>(j + half)] = mag * mag;
    total += mag * mag;
  }
  for (double& k : kernel.weights) k /= total;
  return kernel;
}

}  // namespace optomech
