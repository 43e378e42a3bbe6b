#pragma once

// Thin RAII wrapper over FFTW real transforms. Plans are created once per size
// under a global lock (FFTW's planner is not thread-safe) and executed through
// the new-array interface on per-thread aligned buffers.

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

namespace attnshift::fft {

namespace detail {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
  ~PlanPair() {
    if (forward) fftw_destroy_plan(forward);
    if (inverse) fftw_destroy_plan(inverse);
  }
};

inline std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

template <typename T>
struct FftwDeleter {
  void operator()(T* p) const { fftw_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwDeleter<T>>;

struct Workspace {
  std::size_t n = 0;
  FftwBuffer<double> real;
  FftwBuffer<fftw_complex> spec;
};

inline Workspace& workspace(std::size_t n) {
  thread_local std::map<std::size_t, Workspace> spaces;
  auto& ws = spaces[n];
  if (ws.n != n) {
    ws.n = n;
    ws.real.reset(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
    ws.spec.reset(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1))));
  }
  return ws;
}

inline const PlanPair& plans(std::size_t n) {
  static std::map<std::size_t, std::unique_ptr<PlanPair>> cache;
  std::lock_guard lock(planner_mutex());
  auto& slot = cache[n];
  if (!slot) {
    slot = std::make_unique<PlanPair>();
    FftwBuffer<double> r(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
    FftwBuffer<fftw_complex> c(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1))));
    const int ni = static_cast<int>(n);
    slot->forward = fftw_plan_dft_r2c_1d(ni, r.get(), c.get(), FFTW_ESTIMATE);
    slot->inverse = fftw_plan_dft_c2r_1d(ni, c.get(), r.get(), FFTW_ESTIMATE);
  }
  return *slot;
}

}  // namespace detail

// Unnormalized forward transform: X[k] = sum_n x[n] exp(-2 pi i k n / N), k = 0..N/2.
inline std::vector<std::complex<double>> rfft(std::span<const double> x) {
  const std::size_t n = x.size();
  const auto& p = detail::plans(n);
  auto& ws = detail::workspace(n);
  std::copy(x.begin(), x.end(), ws.real.get());
  fftw_execute_dft_r2c(p.forward, ws.real.get(), ws.spec.get());
  std::vector<std::complex<double>> out(n / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = {ws.spec[k][0], ws.spec[k][1]};
  return out;
}

// Inverse of rfft for a length-n signal, including the 1/N normalization.
inline std::vector<double> irfft(std::span<const std::complex<double>> spec, std::size_t n) {
  const auto& p = detail::plans(n);
  auto& ws = detail::workspace(n);
  for (std::size_t k = 0; k < n / 2 + 1; ++k) {
    ws.spec[k][0] = spec[k].real();
    ws.spec[k][1] = spec[k].imag();
  }
  fftw_execute_dft_c2r(p.inverse, ws.spec.get(), ws.real.get());
  std::vector<double> out(ws.real.get(), ws.real.get() + n);
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& v : out) v *= scale;
  return out;
}

}  // namespace attnshift::fft
