#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "optomech/detail/fft.hpp"
#include "optomech/errors.hpp"
#include "optomech/spectrum.hpp"

namespace optomech {

struct TimeSeries {
  double sample_rate_hz = 0.0;
  std::vector<double> samples;
  std::uint64_t seed = 0;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

// Colored Gaussian noise with a prescribed one-sided PSD, built in the
// frequency domain: each positive bin gets an independent complex Gaussian
// with <|X_k|^2> = S(f_k) fs N / 2, then one inverse real FFT. Exact by
// construction; a Welch re-estimate converges to the model as averages grow.
// Bins below the model's lowest frequency are set to zero (the model does
// not extend there); the DC bin is always zero.
inline TimeSeries synthesize_timeseries(const NoiseSpectrum& model, double sample_rate_hz,
                                        double duration_s, std::uint64_t seed) {
  if (model.unit().density != Density::power)
    throw UnitError("synthesize: model must be a power spectral density");
  if (!(sample_rate_hz > 0.0) || !(duration_s > 0.0))
    throw DomainError("synthesize: sample rate and duration must be positive");
  double nyquist = sample_rate_hz / 2.0;
  if (model.f_max() < nyquist * (1.0 - 1e-12))
    throw DomainError("synthesize: model must cover the Nyquist frequency " +
                      std::to_string(nyquist) + " Hz");
  std::size_t n = 2 * static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz / 2.0));
  if (n < 4) throw DomainError("synthesize: record too short");

  double df = sample_rate_hz / static_cast<double>(n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::complex<double>> bins(n / 2 + 1);
  bins[0] = 0.0;
  double half_power = sample_rate_hz * static_cast<double>(n) / 4.0;
  for (std::size_t k = 1; k < n / 2; ++k) {
    double f = df * static_cast<double>(k);
    double s = f < model.f_min() ? 0.0 : model.value_at(f);
    double amp = std::sqrt(s * half_power);
    double g1 = gauss(rng), g2 = gauss(rng);
    bins[k] = {amp * g1, amp * g2};
  }
  double f_nyq = std::min(nyquist, model.f_max());
  double s_nyq = f_nyq < model.f_min() ? 0.0 : model.value_at(f_nyq);
  bins[n / 2] = std::sqrt(s_nyq * 2.0 * half_power) * gauss(rng);

  return {sample_rate_hz, detail::inverse_real_fft(bins, n), seed};
}

// Binary record: one text header line, then raw little-endian doubles.
inline void save_timeseries(const TimeSeries& ts, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  char header[128];
  std::snprintf(header, sizeof header, "timeseries sample_rate_hz=%.12e n=%zu seed=%llu\n",
                ts.sample_rate_hz, ts.samples.size(),
                static_cast<unsigned long long>(ts.seed));
  out << header;
  out.write(reinterpret_cast<const char*>(ts.samples.data()),
            static_cast<std::streamsize>(ts.samples.size() * sizeof(double)));
  if (!out) throw IoError("write failure on '" + path + "'");
}

inline TimeSeries load_timeseries(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open time series '" + path + "'");
  std::string header;
  std::getline(in, header);
  double fs = 0.0;
  std::size_t n = 0;
  unsigned long long seed = 0;
  if (std::sscanf(header.c_str(), "timeseries sample_rate_hz=%lf n=%zu seed=%llu", &fs, &n,
                  &seed) != 3)
    throw IoError(path + ": bad time series header");
  if (!(fs > 0.0) || n == 0) throw IoError(path + ": invalid header values");
  TimeSeries ts{fs, std::vector<double>(n), seed};
  in.read(reinterpret_cast<char*>(ts.samples.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(n * sizeof(double)))
    throw IoError(path + ": truncated sample block");
  return ts;
}

}  // namespace optomech
