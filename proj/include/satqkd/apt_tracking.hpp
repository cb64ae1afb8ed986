#pragma once

// Cascaded coarse/fine pointing loop. Both stages are proportional
// controllers with one frame of latency; the fine stage works on the coarse
// stage's residual, and the coarse stage takes over whatever the fine mirror
// accumulates at low frequency.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include "satqkd/core.hpp"

namespace satqkd {

struct TrackingStageConfig {
  double field_of_view_rad = 0.0;  // full width
  double frame_rate_hz = 0.0;
  double actuator_range_rad = 0.0;  // full travel
  double loop_gain = 0.0;           // 0 disables the stage

  void validate() const {
    if (!(field_of_view_rad > 0.0)) throw ConfigError("apt_tracking", "field of view must be > 0");
    if (!(frame_rate_hz > 0.0)) throw ConfigError("apt_tracking", "frame rate must be > 0");
    if (!(actuator_range_rad > 0.0)) throw ConfigError("apt_tracking", "actuator range must be > 0");
    if (!(loop_gain >= 0.0 && loop_gain <= 1.0))
      throw ConfigError("apt_tracking", "loop gain outside [0, 1]");
  }
  bool operator==(const TrackingStageConfig&) const = default;
};

/// Gimbal mirror + wide-field camera.
inline TrackingStageConfig default_coarse_stage() {
  return {2.3 * kDegToRad, 40.0, 10.0 * kDegToRad, 0.25};
}

/// Piezo fast steering mirror + narrow-field camera.
inline TrackingStageConfig default_fine_stage() { return {0.64e-3, 2000.0, 1.6e-3, 1.0}; }

/// Line-of-sight disturbance per axis: a slow sinusoidal platform drift plus
/// exponentially correlated jitter (white when the correlation time is 0).
struct DisturbanceModel {
  double bias_drift_amplitude_rad = 200e-6;
  double bias_drift_period_s = 30.0;
  double white_jitter_rms_rad = 20e-6;
  double jitter_correlation_time_s = 0.3;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(bias_drift_amplitude_rad >= 0.0 && white_jitter_rms_rad >= 0.0))
      throw ConfigError("apt_tracking", "disturbance amplitudes must be >= 0");
    if (!(bias_drift_period_s > 0.0)) throw ConfigError("apt_tracking", "drift period must be > 0");
    if (!(jitter_correlation_time_s >= 0.0))
      throw ConfigError("apt_tracking", "jitter correlation time must be >= 0");
  }
  bool operator==(const DisturbanceModel&) const = default;
};

struct TrackingSample {
  double t_s;
  double err_x_rad;
  double err_y_rad;
};

struct TrackingTrace {
  std::vector<TrackingSample> samples;
  bool coarse_saturated = false;
  bool fine_saturated = false;
  bool loss_of_lock = false;
  std::optional<double> loss_of_lock_time_s;

  /// Per-axis RMS over samples with t in [t0, t1).
  [[nodiscard]] std::pair<double, double> rms(double t0, double t1) const {
    double sx = 0.0;
    double sy = 0.0;
    std::size_t n = 0;
    for (const auto& s : samples) {
      if (s.t_s < t0 || s.t_s >= t1) continue;
      sx += s.err_x_rad * s.err_x_rad;
      sy += s.err_y_rad * s.err_y_rad;
      ++n;
    }
    if (n == 0) return {0.0, 0.0};
    return {std::sqrt(sx / n), std::sqrt(sy / n)};
  }

  [[nodiscard]] std::pair<double, double> rms() const {
    if (samples.empty()) return {0.0, 0.0};
    return rms(samples.front().t_s, samples.back().t_s + 1.0);
  }

  /// Single effective per-axis jitter used by the link budget.
  [[nodiscard]] double effective_rms() const {
    const auto [x, y] = rms();
    return std::sqrt(0.5 * (x * x + y * y));
  }
};

inline TrackingTrace simulate_two_stage_tracking(double duration_s, const TrackingStageConfig& coarse,
                                                 const TrackingStageConfig& fine,
                                                 const DisturbanceModel& disturbance) {
  coarse.validate();
  fine.validate();
  disturbance.validate();
  if (!(duration_s > 0.0)) throw ConfigError("apt_tracking", "duration must be > 0");
  if (!(fine.field_of_view_rad < coarse.field_of_view_rad))
    throw ConfigError("apt_tracking", "fine field of view must be narrower than coarse");

  const double dt = 1.0 / fine.frame_rate_hz;
  const auto n_samples = static_cast<std::size_t>(std::floor(duration_s * fine.frame_rate_hz));
  const auto coarse_every =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fine.frame_rate_hz / coarse.frame_rate_hz)));

  std::mt19937_64 rng(disturbance.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double tau = disturbance.jitter_correlation_time_s;
  const double rho = tau > 0.0 ? std::exp(-dt / tau) : 0.0;
  const double innovation = disturbance.white_jitter_rms_rad * std::sqrt(1.0 - rho * rho);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * kPi);
  const double phase[2] = {phase_dist(rng), phase_dist(rng)};
  double jitter[2] = {disturbance.white_jitter_rms_rad * normal(rng),
                      disturbance.white_jitter_rms_rad * normal(rng)};

  const double coarse_limit = 0.5 * coarse.actuator_range_rad;
  const double fine_limit = 0.5 * fine.actuator_range_rad;
  const double fine_half_fov = 0.5 * fine.field_of_view_rad;
  const double coarse_half_fov = 0.5 * coarse.field_of_view_rad;

  auto drift = [&](int axis, double t) {
    return disturbance.bias_drift_amplitude_rad *
           std::sin(2.0 * kPi * t / disturbance.bias_drift_period_s + phase[axis]);
  };

  TrackingTrace trace;
  trace.samples.reserve(n_samples);
  // Acquisition has completed: the gimbal starts on the line of sight.
  double gimbal[2] = {drift(0, 0.0) + jitter[0], drift(1, 0.0) + jitter[1]};
  double mirror[2] = {0.0, 0.0};
  double coarse_pending[2] = {0.0, 0.0};
  double fine_pending[2] = {0.0, 0.0};
  double out_of_fov_since = -1.0;

  for (std::size_t k = 0; k < n_samples; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (k > 0) {
      for (int a = 0; a < 2; ++a) jitter[a] = rho * jitter[a] + innovation * normal(rng);
    }

    // Corrections measured on the previous frame take effect now.
    for (int a = 0; a < 2; ++a) {
      const double m = mirror[a] + fine_pending[a];
      mirror[a] = std::clamp(m, -fine_limit, fine_limit);
      if (mirror[a] != m) trace.fine_saturated = true;
      fine_pending[a] = 0.0;
    }
    const bool coarse_frame = (k % coarse_every) == 0;
    if (coarse_frame) {
      for (int a = 0; a < 2; ++a) {
        const double g = gimbal[a] + coarse_pending[a];
        gimbal[a] = std::clamp(g, -coarse_limit, coarse_limit);
        if (gimbal[a] != g) trace.coarse_saturated = true;
        coarse_pending[a] = 0.0;
      }
    }

    double residual[2];
    for (int a = 0; a < 2; ++a) {
      const double los = drift(a, t) + jitter[a];
      residual[a] = los - gimbal[a] - mirror[a];
      if (coarse_frame) {
        const double seen = los - gimbal[a];
        if (std::abs(seen) <= coarse_half_fov) coarse_pending[a] = coarse.loop_gain * seen;
      }
    }
    const bool in_fine_fov = std::abs(residual[0]) <= fine_half_fov && std::abs(residual[1]) <= fine_half_fov;
    if (in_fine_fov) {
      for (int a = 0; a < 2; ++a) fine_pending[a] = fine.loop_gain * residual[a];
      out_of_fov_since = -1.0;
    } else {
      if (out_of_fov_since < 0.0) out_of_fov_since = t;
      if (!trace.loss_of_lock && t - out_of_fov_since > 1.0) {
        trace.loss_of_lock = true;
        trace.loss_of_lock_time_s = out_of_fov_since;
      }
    }
    trace.samples.push_back({t, residual[0], residual[1]});
  }
  return trace;
}

/// Time-averaged on-axis coupling of a Gaussian beam with 1/e^2 half-angle
/// theta0 under independent Gaussian pointing jitter of sigma per axis.
inline double pointing_transmission_factor(double jitter_rms_per_axis_rad, double beam_half_angle_1e2_rad) {
  if (!(jitter_rms_per_axis_rad >= 0.0)) throw DomainError("apt_tracking", "jitter must be >= 0");
  if (!(beam_half_angle_1e2_rad > 0.0)) throw DomainError("apt_tracking", "beam half-angle must be > 0");
  const double t2 = beam_half_angle_1e2_rad * beam_half_angle_1e2_rad;
  return t2 / (t2 + 4.0 * jitter_rms_per_axis_rad * jitter_rms_per_axis_rad);
}

inline void write_tracking_csv(std::ostream& os, const TrackingTrace& trace) {
  os << "t_s,err_x_urad,err_y_urad\n";
  for (const auto& s : trace.samples) {
    os << format_fixed(s.t_s, 4) << ',' << format_fixed(s.err_x_rad * 1e6, 4) << ','
       << format_fixed(s.err_y_rad * 1e6, 4) << '\n';
  }
  const auto [x, y] = trace.rms();
  os << "# rms_x_urad=" << format_fixed(x * 1e6, 4) << " rms_y_urad=" << format_fixed(y * 1e6, 4)
     << " loss_of_lock=" << (trace.loss_of_lock ? 1 : 0) << '\n';
}

}  // namespace satqkd
