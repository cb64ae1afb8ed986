#pragma once

// Pass-dependent rotation of the polarization reference frame and its
// compensation with a motorized half-wave plate.
//
// Angles here are half-wave-plate angles: a plate at angle a rotates linear
// polarization by 2a, so a rotation angle of 45 degrees maps H onto V and the
// contrast curves repeat every 90 degrees.

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <vector>

#include "satqkd/core.hpp"
#include "satqkd/orbit_pass.hpp"

namespace satqkd {

struct PolarizationModel {
  double static_offset_deg = 0.0;
  double intrinsic_contrast = 300.0;
  double hwp_step_deg = 0.5;
  double hwp_update_interval_s = 1.0;

  void validate() const {
    if (!(intrinsic_contrast > 1.0)) throw ConfigError("polarization", "intrinsic contrast must be > 1");
    if (!(hwp_step_deg > 0.0)) throw ConfigError("polarization", "HWP step must be > 0");
    if (!(hwp_update_interval_s > 0.0)) throw ConfigError("polarization", "HWP update interval must be > 0");
  }
  bool operator==(const PolarizationModel&) const = default;
};

struct ContrastSample {
  double t_s = 0.0;
  double rotation_angle_deg = 0.0;
  double contrast_uncompensated = 0.0;
  double contrast_compensated = 0.0;
};

/// Maps an angle onto (-90, 90].
inline double normalize_hwp_angle(double deg) {
  double a = std::fmod(deg, 180.0);
  if (a <= -90.0) a += 180.0;
  if (a > 90.0) a -= 180.0;
  return a;
}

/// Signed angle of the line of sight out of the cross-track plane, in
/// degrees. Zero at closest approach, negative while approaching.
inline double along_track_angle_deg(const TrajectoryPoint& point) {
  const auto los = line_of_sight_enu(point.azimuth_deg, point.elevation_deg);
  return std::asin(std::clamp(los[1], -1.0, 1.0)) * kRadToDeg;
}

/// Frame rotation seen by the receiver: half the along-track line-of-sight
/// sweep (wave-plate units) plus the calibrated birefringence offset.
inline double predicted_rotation_angle(const TrajectoryPoint& point, const PolarizationModel& model) {
  return normalize_hwp_angle(0.5 * along_track_angle_deg(point) + model.static_offset_deg);
}

/// Analyzer contrast after a frame misalignment of angle_deg, combined with
/// the intrinsic contrast of source and analyzer.
inline double contrast_for_misalignment(double angle_deg, double intrinsic_contrast) {
  const double intrinsic_error = 1.0 / (1.0 + intrinsic_contrast);
  const double s = std::sin(2.0 * angle_deg * kDegToRad);
  const double s2 = s * s;
  const double wrong = s2 * (1.0 - intrinsic_error) + (1.0 - s2) * intrinsic_error;
  if (wrong <= 0.0) return std::numeric_limits<double>::infinity();
  return (1.0 - wrong) / wrong;
}

/// Fraction of photons analyzed into the wrong port.
inline double contrast_to_qber(double contrast) {
  if (!(contrast >= 0.0)) throw DomainError("polarization", "contrast must be >= 0");
  if (std::isinf(contrast)) return 0.0;
  return 1.0 / (1.0 + contrast);
}

inline double quantize_hwp(double angle_deg, double step_deg) {
  return std::round(angle_deg / step_deg) * step_deg;
}

inline std::vector<ContrastSample> contrast_series(const std::vector<TrajectoryPoint>& pass,
                                                   const PolarizationModel& model, bool compensate = true) {
  model.validate();
  std::vector<ContrastSample> out;
  out.reserve(pass.size());
  double plate = 0.0;
  double last_update = -std::numeric_limits<double>::infinity();
  for (const auto& p : pass) {
    const double angle = predicted_rotation_angle(p, model);
    if (p.t_s - last_update >= model.hwp_update_interval_s - 1e-9) {
      plate = quantize_hwp(angle, model.hwp_step_deg);
      last_update = p.t_s;
    }
    ContrastSample s;
    s.t_s = p.t_s;
    s.rotation_angle_deg = angle;
    s.contrast_uncompensated = contrast_for_misalignment(angle, model.intrinsic_contrast);
    s.contrast_compensated = compensate ? contrast_for_misalignment(normalize_hwp_angle(angle - plate),
                                                                    model.intrinsic_contrast)
                                        : s.contrast_uncompensated;
    out.push_back(s);
  }
  return out;
}

/// Static offset that places the first point of the pass at the requested
/// uncompensated contrast, on the side where the sweep then runs through 45
/// degrees.
inline double calibrate_static_offset(const std::vector<TrajectoryPoint>& pass, const PolarizationModel& model,
                                      double start_contrast) {
  if (pass.empty()) throw ConfigError("polarization", "empty pass");
  if (!(start_contrast > 0.0 && start_contrast < model.intrinsic_contrast))
    throw ConfigError("polarization", "start contrast must lie in (0, intrinsic contrast)");
  const double qi = 1.0 / (1.0 + model.intrinsic_contrast);
  const double wrong = 1.0 / (1.0 + start_contrast);
  const double s2 = (wrong - qi) / (1.0 - 2.0 * qi);
  const double start_angle = 0.5 * std::asin(std::sqrt(s2)) * kRadToDeg;
  return start_angle - 0.5 * along_track_angle_deg(pass.front());
}

inline double mean_contrast(const std::vector<ContrastSample>& series, bool compensated) {
  if (series.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : series) sum += compensated ? s.contrast_compensated : s.contrast_uncompensated;
  return sum / static_cast<double>(series.size());
}

inline void write_contrast_csv(std::ostream& os, const std::vector<ContrastSample>& series) {
  os << "t_s,angle_deg,cr_uncomp,cr_comp\n";
  for (const auto& s : series) {
    os << format_fixed(s.t_s, 3) << ',' << format_fixed(s.rotation_angle_deg, 6) << ','
       << format_fixed(s.contrast_uncompensated, 6) << ',' << format_fixed(s.contrast_compensated, 6) << '\n';
  }
}

}  // namespace satqkd
