#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "optomech/errors.hpp"

namespace optomech {

// Physical quantity whose fluctuations a spectrum describes.
enum class Quantity { displacement, force, frequency, dimensionless };

// Power spectral density (unit^2/Hz) or amplitude spectral density (unit/rtHz).
enum class Density { power, amplitude };

struct SpectrumUnit {
  Quantity quantity = Quantity::dimensionless;
  Density density = Density::power;
  bool operator==(const SpectrumUnit&) const = default;
};

inline constexpr SpectrumUnit displacement_psd{Quantity::displacement, Density::power};
inline constexpr SpectrumUnit force_psd{Quantity::force, Density::power};
inline constexpr SpectrumUnit frequency_psd{Quantity::frequency, Density::power};
inline constexpr SpectrumUnit dimensionless_psd{Quantity::dimensionless, Density::power};

inline std::string to_string(SpectrumUnit u) {
  const char* base = nullptr;
  switch (u.quantity) {
    case Quantity::displacement: base = "m"; break;
    case Quantity::force: base = "N"; break;
    case Quantity::frequency: base = "Hz"; break;
    case Quantity::dimensionless: base = "1"; break;
  }
  return u.density == Density::power ? std::string(base) + "^2/Hz"
                                     : std::string(base) + "/rtHz";
}

inline SpectrumUnit unit_from_string(const std::string& tag) {
  for (Quantity q : {Quantity::displacement, Quantity::force, Quantity::frequency,
                     Quantity::dimensionless})
    for (Density d : {Density::power, Density::amplitude})
      if (to_string({q, d}) == tag) return {q, d};
  throw UnitError("unrecognized spectrum unit tag '" + tag + "'");
}

// One-sided noise spectrum sampled on a strictly increasing frequency grid.
// Immutable value object: all operations return new spectra.
class NoiseSpectrum {
 public:
  NoiseSpectrum(std::vector<double> frequencies_hz, std::vector<double> values,
                SpectrumUnit unit)
      : f_(std::move(frequencies_hz)), v_(std::move(values)), unit_(unit) {
    if (f_.size() != v_.size())
      throw DomainError("NoiseSpectrum: frequency and value arrays differ in length");
    if (f_.size() < 2)
      throw DomainError("NoiseSpectrum: need at least two grid points");
    for (std::size_t i = 1; i < f_.size(); ++i)
      if (!(f_[i] > f_[i - 1]))
        throw DomainError("NoiseSpectrum: frequency grid must be strictly increasing");
    for (double v : v_)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw DomainError("NoiseSpectrum: spectral values must be finite and >= 0");
  }

  const std::vector<double>& frequencies() const { return f_; }
  const std::vector<double>& values() const { return v_; }
  SpectrumUnit unit() const { return unit_; }
  std::size_t size() const { return f_.size(); }
  double f_min() const { return f_.front(); }
  double f_max() const { return f_.back(); }

  // Linear interpolation inside the grid span. No extrapolation.
  double value_at(double f_hz) const {
    if (f_hz < f_min() || f_hz > f_max())
      throw DomainError("NoiseSpectrum::value_at: frequency outside grid span");
    auto it = std::upper_bound(f_.begin(), f_.end(), f_hz);
    if (it == f_.end()) return v_.back();
    std::size_t hi = static_cast<std::size_t>(it - f_.begin());
    if (hi == 0) return v_.front();
    std::size_t lo = hi - 1;
    double t = (f_hz - f_[lo]) / (f_[hi] - f_[lo]);
    return v_[lo] + t * (v_[hi] - v_[lo]);
  }

  NoiseSpectrum with_values(std::vector<double> values, SpectrumUnit unit) const {
    return NoiseSpectrum(f_, std::move(values), unit);
  }

  friend NoiseSpectrum operator+(const NoiseSpectrum& a, const NoiseSpectrum& b) {
    if (a.unit_ != b.unit_)
      throw UnitError("spectrum addition: unit tags differ (" + to_string(a.unit_) +
                      " vs " + to_string(b.unit_) + ")");
    if (a.f_ != b.f_)
      throw DomainError("spectrum addition: frequency grids differ");
    std::vector<double> sum(a.size());
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = a.v_[i] + b.v_[i];
    return NoiseSpectrum(a.f_, std::move(sum), a.unit_);
  }

  friend NoiseSpectrum operator*(const NoiseSpectrum& a, double scale) {
    if (scale < 0.0) throw DomainError("spectrum scaling: factor must be >= 0");
    std::vector<double> scaled(a.size());
    for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = a.v_[i] * scale;
    return NoiseSpectrum(a.f_, std::move(scaled), a.unit_);
  }

 private:
  std::vector<double> f_;
  std::vector<double> v_;
  SpectrumUnit unit_;
};

// Element-wise square root; unit^2/Hz becomes unit/rtHz.
inline NoiseSpectrum asd_from_psd(const NoiseSpectrum& psd) {
  if (psd.unit().density != Density::power)
    throw UnitError("asd_from_psd: input is not a power spectral density");
  std::vector<double> amp(psd.size());
  for (std::size_t i = 0; i < amp.size(); ++i) amp[i] = std::sqrt(psd.values()[i]);
  return psd.with_values(std::move(amp), {psd.unit().quantity, Density::amplitude});
}

// Trapezoidal integral of a PSD over [f_lo, f_hi], in unit^2. Exact for
// piecewise-linear spectra on the stored grid; no extrapolation outside it.
inline double integrate_psd(const NoiseSpectrum& s, double f_lo, double f_hi) {
  if (s.unit().density != Density::power)
    throw UnitError("integrate_psd: input is not a power spectral density");
  if (f_lo > f_hi) throw DomainError("integrate_psd: f_lo > f_hi");
  if (f_lo < s.f_min() || f_hi > s.f_max())
    throw DomainError("integrate_psd: integration range outside grid span");
  if (f_lo == f_hi) return 0.0;

  const auto& f = s.frequencies();
  const auto& v = s.values();
  double acc = 0.0;
  double fa = f_lo, va = s.value_at(f_lo);
  auto it = std::upper_bound(f.begin(), f.end(), f_lo);
  for (; it != f.end() && *it < f_hi; ++it) {
    std::size_t i = static_cast<std::size_t>(it - f.begin());
    acc += 0.5 * (va + v[i]) * (f[i] - fa);
    fa = f[i];
    va = v[i];
  }
  acc += 0.5 * (va + s.value_at(f_hi)) * (f_hi - fa);
  return acc;
}

// Frequency grid specification used to evaluate model spectra.
struct FrequencyGrid {
  enum class Spacing { linear, logarithmic };

  double f_min_hz = 0.0;
  double f_max_hz = 0.0;
  std::size_t n_points = 0;
  Spacing spacing = Spacing::linear;

  void validate() const {
    if (n_points < 2) throw DomainError("FrequencyGrid: need at least two points");
    if (!(f_min_hz < f_max_hz)) throw DomainError("FrequencyGrid: f_min must be < f_max");
    if (spacing == Spacing::logarithmic && f_min_hz <= 0.0)
      throw DomainError("FrequencyGrid: log spacing requires f_min > 0");
    if (f_min_hz < 0.0) throw DomainError("FrequencyGrid: f_min must be >= 0");
  }

  std::vector<double> frequencies() const {
    validate();
    std::vector<double> f(n_points);
    if (spacing == Spacing::linear) {
      double step = (f_max_hz - f_min_hz) / static_cast<double>(n_points - 1);
      for (std::size_t i = 0; i < n_points; ++i)
        f[i] = f_min_hz + step * static_cast<double>(i);
    } else {
      double ratio = std::log(f_max_hz / f_min_hz) / static_cast<double>(n_points - 1);
      for (std::size_t i = 0; i < n_points; ++i)
        f[i] = f_min_hz * std::exp(ratio * static_cast<double>(i));
    }
    f.front() = f_min_hz;
    f.back() = f_max_hz;
    return f;
  }
};

// Evaluates a scalar function of frequency on a ready-made grid.
template <typename Fn>
NoiseSpectrum tabulate(const std::vector<double>& frequencies_hz, SpectrumUnit unit, Fn&& fn) {
  std::vector<double> v(frequencies_hz.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(frequencies_hz[i]);
  return NoiseSpectrum(frequencies_hz, std::move(v), unit);
}

}  // namespace optomech
