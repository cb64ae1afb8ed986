#pragma once

// Vacuum + weak-decoy bounds on the single-photon yield and error rate, with
// Gaussian statistical fluctuation and worst-casing over the source
// intensity fluctuation interval.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "satqkd/core.hpp"
#include "satqkd/postprocess/sifting.hpp"
#include "satqkd/quantum_channel.hpp"

namespace satqkd {

struct DecoyBounds {
  double y0_estimate = 0.0;
  double y1_lower = 0.0;
  double e1_upper = 0.5;
  double q1_lower = 0.0;
  double epsilon_per_bound = 0.0;
  double z_score = 0.0;
  bool abort = false;
  std::string abort_reason;
};

/// One-sided Gaussian quantile: smallest z with P(Z > z) <= epsilon.
inline double z_for_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw DomainError("key_postprocess", "epsilon outside (0, 0.5)");
  double lo = 0.0;
  double hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(mid / std::sqrt(2.0)) > epsilon)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

namespace detail {

/// Rate count/trials shifted by z binomial standard deviations. An empty
/// count still carries the spread of a single event.
inline double shifted_rate(double count, double trials, double z) {
  if (trials <= 0.0) return 0.0;
  const double p = count / trials;
  const double sd = std::sqrt(std::max(count, 1.0) * std::max(1.0 - p, 0.0)) / trials;
  return std::clamp(p + z * sd, 0.0, 1.0);
}

}  // namespace detail

inline DecoyBounds decoy_bounds(const GainStatistics& stats, const SourceConfig& source, double epsilon) {
  for (auto c : kAllClasses) {
    if (stats.sent[static_cast<std::size_t>(c)] == 0)
      throw DomainError("key_postprocess", std::string("no pulses sent in class ") + to_string(c));
  }
  if (!(source.mu_signal > source.mu_decoy)) throw DomainError("key_postprocess", "need mu_signal > mu_decoy");

  DecoyBounds b;
  b.epsilon_per_bound = epsilon;
  b.z_score = z_for_epsilon(epsilon);
  const double z = b.z_score;
  const auto s = static_cast<std::size_t>(IntensityClass::signal);
  const auto d = static_cast<std::size_t>(IntensityClass::decoy);
  const auto v = static_cast<std::size_t>(IntensityClass::vacuum);

  auto as_double = [](std::uint64_t x) { return static_cast<double>(x); };
  b.y0_estimate = stats.gain(IntensityClass::vacuum);
  const double y0_upper = detail::shifted_rate(as_double(stats.detected[v]), as_double(stats.sent[v]), z);
  const double y0_lower = detail::shifted_rate(as_double(stats.detected[v]), as_double(stats.sent[v]), -z);
  const double qs_upper = detail::shifted_rate(as_double(stats.detected[s]), as_double(stats.sent[s]), z);
  const double qd_lower = detail::shifted_rate(as_double(stats.detected[d]), as_double(stats.sent[d]), -z);
  const double qd_upper = detail::shifted_rate(as_double(stats.detected[d]), as_double(stats.sent[d]), z);
  const double ed_upper = stats.matched[d]
                              ? detail::shifted_rate(as_double(stats.errors[d]), as_double(stats.matched[d]), z)
                              : 0.5;
  const double edqd_upper = std::min(ed_upper * qd_upper, 1.0);

  double y1_min = std::numeric_limits<double>::infinity();
  double e1_max = 0.0;
  double q1_min = std::numeric_limits<double>::infinity();
  const double f = source.intensity_fluctuation;
  for (double fs : {1.0 - f, 1.0 + f}) {
    for (double fd : {1.0 - f, 1.0 + f}) {
      const double ms = source.mu_signal * fs;
      const double md = source.mu_decoy * fd;
      if (!(ms > md)) continue;
      const double y1 = ms / (ms * md - md * md) *
                        (qd_lower * std::exp(md) - qs_upper * std::exp(ms) * md * md / (ms * ms) -
                         (ms * ms - md * md) / (ms * ms) * y0_upper);
      y1_min = std::min(y1_min, y1);
      if (y1 > 0.0) {
        e1_max = std::max(e1_max, (edqd_upper * std::exp(md) - 0.5 * y0_lower) / (y1 * md));
        q1_min = std::min(q1_min, ms * std::exp(-ms) * y1);
      }
    }
  }
  if (!(y1_min > 0.0) || !std::isfinite(y1_min)) {
    b.abort = true;
    b.abort_reason = "single-photon yield lower bound is not positive";
    b.y1_lower = 0.0;
    b.e1_upper = 0.5;
    b.q1_lower = 0.0;
    return b;
  }
  b.y1_lower = std::clamp(y1_min, 0.0, 1.0);
  b.e1_upper = std::clamp(e1_max, 0.0, 1.0);
  b.q1_lower = std::clamp(q1_min, 0.0, stats.gain(IntensityClass::signal));
  return b;
}

/// Final key length after error correction and privacy amplification.
inline std::uint64_t secure_key_length(std::uint64_t n_sifted, const DecoyBounds& bounds,
                                       const GainStatistics& stats, double leak_ec_bits, double epsilon_pa) {
  if (bounds.abort) return 0;
  const double qs = stats.gain(IntensityClass::signal);
  if (!(qs > 0.0) || n_sifted == 0) return 0;
  const double single_photon_bits = static_cast<double>(n_sifted) * (bounds.q1_lower / qs);
  const double length = single_photon_bits * (1.0 - binary_entropy(bounds.e1_upper)) - leak_ec_bits -
                        2.0 * std::log2(1.0 / epsilon_pa);
  if (!(length > 0.0) || bounds.e1_upper >= 0.5) return 0;
  return static_cast<std::uint64_t>(std::floor(length));
}

}  // namespace satqkd
