#pragma once

// Toeplitz-matrix privacy amplification. Output bit i is the GF(2) inner
// product of row i of a seeded random Toeplitz matrix with the key, which is
// the parity of one coefficient of an integer convolution; the convolution is
// done with FFTW.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <random>
#include <span>
#include <vector>

#include "satqkd/core.hpp"
#include "satqkd/postprocess/sifting.hpp"

namespace satqkd {

/// First column followed by first row: n + m - 1 bits define an m x n Toeplitz matrix.
inline Bits toeplitz_seed_bits(std::size_t input_length, std::size_t output_length, std::uint64_t seed) {
  Bits r(input_length + output_length - 1);
  std::mt19937_64 rng(mix_seed(seed, 0x9A));
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (i % 64 == 0) word = rng();
    r[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1U);
  }
  return r;
}

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <class T>
FftwBuffer<T> fftw_buffer(std::size_t count) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * count));
  if (!p) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

inline std::size_t fft_size(std::size_t at_least) {
  std::size_t n = 1;
  while (n < at_least) n <<= 1;
  return n;
}

}  // namespace detail

inline Bits privacy_amplify(std::span<const std::uint8_t> key, std::size_t target_length, std::uint64_t seed) {
  const std::size_t n = key.size();
  if (target_length > n) throw LengthError("key_postprocess", "target length exceeds key length");
  if (target_length == 0) return {};

  const Bits r = toeplitz_seed_bits(n, target_length, seed);
  const std::size_t size = detail::fft_size(r.size() + n - 1);
  const std::size_t spectrum = size / 2 + 1;

  auto in_r = detail::fftw_buffer<double>(size);
  auto in_x = detail::fftw_buffer<double>(size);
  auto out_r = detail::fftw_buffer<fftw_complex>(spectrum);
  auto out_x = detail::fftw_buffer<fftw_complex>(spectrum);

  fftw_plan forward_r;
  fftw_plan forward_x;
  fftw_plan inverse;
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    forward_r = fftw_plan_dft_r2c_1d(static_cast<int>(size), in_r.get(), out_r.get(), FFTW_ESTIMATE);
    forward_x = fftw_plan_dft_r2c_1d(static_cast<int>(size), in_x.get(), out_x.get(), FFTW_ESTIMATE);
    inverse = fftw_plan_dft_c2r_1d(static_cast<int>(size), out_r.get(), in_r.get(), FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < size; ++i) {
    in_r[i] = i < r.size() ? r[i] : 0.0;
    in_x[i] = i < n ? (key[i] & 1U) : 0.0;
  }
  fftw_execute(forward_r);
  fftw_execute(forward_x);
  for (std::size_t k = 0; k < spectrum; ++k) {
    const std::complex<double> p = std::complex<double>(out_r[k][0], out_r[k][1]) *
                                   std::complex<double>(out_x[k][0], out_x[k][1]);
    out_r[k][0] = p.real();
    out_r[k][1] = p.imag();
  }
  fftw_execute(inverse);
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(forward_r);
    fftw_destroy_plan(forward_x);
    fftw_destroy_plan(inverse);
  }

  Bits out(target_length);
  const double scale = 1.0 / static_cast<double>(size);
  for (std::size_t i = 0; i < target_length; ++i) {
    const double v = in_r[i + n - 1] * scale;
    const double rounded = std::round(v);
    if (std::abs(v - rounded) > 0.25) throw Error("key_postprocess", "convolution lost integer precision");
    out[i] = static_cast<std::uint8_t>(static_cast<std::int64_t>(rounded) & 1);
  }
  return out;
}

}  // namespace satqkd
