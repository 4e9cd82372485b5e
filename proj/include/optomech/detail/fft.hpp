#pragma once

#include <complex>
#include <cstring>
#include <memory>
#include <type_traits>
#include <vector>

#include <fftw3.h>

#include "optomech/errors.hpp"

namespace optomech::detail {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
struct FftwDestroyPlan {
  void operator()(std::remove_pointer_t<fftw_plan>* p) const { fftw_destroy_plan(p); }
};
using FftwPlan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, FftwDestroyPlan>;

// Forward real DFT, X_k = sum_n x_n exp(-2 pi i k n / N), k = 0 .. N/2.
// Plans with FFTW_ESTIMATE only: measured plans depend on runtime timing and
// would break the bit-identical determinism contract.
inline std::vector<std::complex<double>> real_fft(const std::vector<double>& x) {
  std::size_t n = x.size();
  if (n < 2) throw DomainError("real_fft: need at least 2 samples");
  std::unique_ptr<double, FftwFree> in(fftw_alloc_real(n));
  std::unique_ptr<fftw_complex, FftwFree> out(fftw_alloc_complex(n / 2 + 1));
  if (!in || !out) throw Error("fft: allocation failed");
  FftwPlan plan(
      fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
  if (!plan) throw Error("fft: plan creation failed");
  std::memcpy(in.get(), x.data(), n * sizeof(double));
  fftw_execute(plan.get());
  std::vector<std::complex<double>> result(n / 2 + 1);
  for (std::size_t k = 0; k < result.size(); ++k)
    result[k] = {out.get()[k][0], out.get()[k][1]};
  return result;
}

// Inverse of real_fft: takes the N/2+1 nonnegative-frequency bins of a
// Hermitian spectrum and returns the length-n real series, 1/N included.
inline std::vector<double> inverse_real_fft(const std::vector<std::complex<double>>& spectrum,
                                            std::size_t n) {
  if (n < 2 || spectrum.size() != n / 2 + 1)
    throw DomainError("inverse_real_fft: spectrum size must be n/2+1");
  std::unique_ptr<fftw_complex, FftwFree> in(fftw_alloc_complex(spectrum.size()));
  std::unique_ptr<double, FftwFree> out(fftw_alloc_real(n));
  if (!in || !out) throw Error("fft: allocation failed");
  FftwPlan plan(
      fftw_plan_dft_c2r_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
  if (!plan) throw Error("fft: plan creation failed");
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    in.get()[k][0] = spectrum[k].real();
    in.get()[k][1] = spectrum[k].imag();
  }
  fftw_execute(plan.get());
  std::vector<double> result(n);
  double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) result[i] = out.get()[i] * scale;
  return result;
}

}  // namespace optomech::detail
