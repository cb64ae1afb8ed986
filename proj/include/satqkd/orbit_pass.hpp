#pragma once

// Pass geometry for a circular orbit over a spherical Earth, seen from one
// ground station. A pass is parameterized by its maximum elevation; the
// ground track is a great circle whose closest approach sets that elevation.

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <vector>

#include "satqkd/core.hpp"

namespace satqkd {

struct GroundStation {
  double latitude_deg = 40.0 + 23.0 / 60.0 + 45.12 / 3600.0;
  double longitude_deg = 117.0 + 34.0 / 60.0 + 38.85 / 3600.0;
  double altitude_m = 890.0;

  void validate() const {
    if (!(std::abs(latitude_deg) <= 90.0)) throw ConfigError("orbit_pass", "latitude outside [-90, 90]");
    if (!(std::abs(longitude_deg) <= 180.0)) throw ConfigError("orbit_pass", "longitude outside [-180, 180]");
    if (!(altitude_m >= 0.0)) throw ConfigError("orbit_pass", "station altitude must be >= 0");
  }
  bool operator==(const GroundStation&) const = default;
};

struct OrbitConfig {
  double altitude_km = 500.0;
  double orbital_speed_kmps = 7.6;
  double earth_radius_km = 6371.0;

  void validate() const {
    if (!(altitude_km > 0.0)) throw ConfigError("orbit_pass", "orbit altitude must be > 0");
    if (!(orbital_speed_kmps > 0.0)) throw ConfigError("orbit_pass", "orbital speed must be > 0");
    if (!(earth_radius_km > 0.0)) throw ConfigError("orbit_pass", "earth radius must be > 0");
  }
  [[nodiscard]] double orbit_radius_km() const { return earth_radius_km + altitude_km; }
  /// Angular rate of the satellite about the Earth's centre, rad/s.
  [[nodiscard]] double mean_motion() const { return orbital_speed_kmps / orbit_radius_km(); }
  bool operator==(const OrbitConfig&) const = default;
};

struct TrajectoryPoint {
  double t_s = 0.0;
  double elevation_deg = 0.0;
  double azimuth_deg = 0.0;
  double slant_range_km = 0.0;
  double angular_rate_degps = 0.0;
};

/// Line-of-sight distance to a satellite at the given elevation: the positive
/// root of d^2 + 2 d R sin(el) = (R + h)^2 - R^2.
inline double slant_range(double elevation_deg, const OrbitConfig& orbit) {
  if (!(elevation_deg >= 0.0 && elevation_deg <= 90.0))
    throw DomainError("orbit_pass", "elevation outside [0, 90] degrees");
  const double R = orbit.earth_radius_km;
  const double r = orbit.orbit_radius_km();
  const double s = std::sin(elevation_deg * kDegToRad);
  if (elevation_deg == 90.0) return orbit.altitude_km;
  // Rationalized form of -R s + sqrt(R^2 s^2 + r^2 - R^2), stable near zenith.
  const double c = r * r - R * R;
  return c / (R * s + std::sqrt(R * R * s * s + c));
}

/// Inverse of slant_range.
inline double elevation_of_range(double range_km, const OrbitConfig& orbit) {
  const double R = orbit.earth_radius_km;
  const double r = orbit.orbit_radius_km();
  const double max_range = std::sqrt(r * r - R * R);
  if (!(range_km >= orbit.altitude_km && range_km <= max_range))
    throw DomainError("orbit_pass", "range not reachable above the horizon");
  const double s = (r * r - R * R - range_km * range_km) / (2.0 * range_km * R);
  return std::asin(std::clamp(s, -1.0, 1.0)) * kRadToDeg;
}

/// Earth central angle between station and sub-satellite point at the given elevation.
inline double central_angle(double elevation_deg, const OrbitConfig& orbit) {
  const double e = elevation_deg * kDegToRad;
  return kPi / 2.0 - e - std::asin(orbit.earth_radius_km * std::cos(e) / orbit.orbit_radius_km());
}

namespace detail {

using Vec3 = std::array<double, 3>;

inline Vec3 normalized(const Vec3& v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return {v[0] / n, v[1] / n, v[2] / n};
}

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

inline double angle_between(const Vec3& a, const Vec3& b) {
  // atan2 of |a x b| and a.b keeps precision for small angles.
  const Vec3 c{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
  return std::atan2(std::sqrt(dot(c, c)), dot(a, b));
}

/// Local east-north-up frame centred on the station. The satellite moves
/// north; closest approach lies to the east at central angle gamma0.
struct PassFrame {
  double station_radius;
  double orbit_radius;
  double gamma0;
  double mean_motion;

  /// Unit line-of-sight vector (east, north, up) at time tau from closest approach.
  [[nodiscard]] Vec3 line_of_sight(double tau) const {
    const double phase = mean_motion * tau;
    const Vec3 sat{orbit_radius * std::cos(phase) * std::sin(gamma0),
                   orbit_radius * std::sin(phase),
                   orbit_radius * std::cos(phase) * std::cos(gamma0) - station_radius};
    return normalized(sat);
  }

  [[nodiscard]] double range(double tau) const {
    const double phase = mean_motion * tau;
    const Vec3 sat{orbit_radius * std::cos(phase) * std::sin(gamma0),
                   orbit_radius * std::sin(phase),
                   orbit_radius * std::cos(phase) * std::cos(gamma0) - station_radius};
    return std::sqrt(dot(sat, sat));
  }

  /// Time from closest approach at which the satellite sits at the given elevation.
  [[nodiscard]] double time_at_elevation(double elevation_deg, const OrbitConfig& orbit) const {
    const double ratio = std::cos(central_angle(elevation_deg, orbit)) / std::cos(gamma0);
    return std::acos(std::clamp(ratio, -1.0, 1.0)) / mean_motion;
  }
};

}  // namespace detail

/// Unit line-of-sight vector (east, north, up) for an azimuth/elevation pair.
inline detail::Vec3 line_of_sight_enu(double azimuth_deg, double elevation_deg) {
  const double az = azimuth_deg * kDegToRad;
  const double el = elevation_deg * kDegToRad;
  return {std::cos(el) * std::sin(az), std::cos(el) * std::cos(az), std::sin(el)};
}

/// Samples a pass from the rising crossing of start_elevation to the setting
/// crossing of end_elevation. The last point sits exactly on the setting
/// crossing even when the span is not a multiple of dt.
inline std::vector<TrajectoryPoint> generate_pass(double max_elevation_deg, double start_elevation_deg,
                                                  double end_elevation_deg, double dt_s,
                                                  const OrbitConfig& orbit) {
  orbit.validate();
  if (!(dt_s > 0.0)) throw ConfigError("orbit_pass", "dt must be > 0");
  if (!(max_elevation_deg <= 90.0)) throw ConfigError("orbit_pass", "max elevation above 90 degrees");
  if (max_elevation_deg < start_elevation_deg)
    throw ConfigError("orbit_pass", "max elevation below start elevation");
  if (start_elevation_deg < end_elevation_deg)
    throw ConfigError("orbit_pass", "end elevation above start elevation");
  if (!(end_elevation_deg >= 0.0)) throw ConfigError("orbit_pass", "end elevation below horizon");

  const detail::PassFrame frame{orbit.earth_radius_km, orbit.orbit_radius_km(),
                                central_angle(max_elevation_deg, orbit), orbit.mean_motion()};
  const double rise = -frame.time_at_elevation(start_elevation_deg, orbit);
  const double set = frame.time_at_elevation(end_elevation_deg, orbit);

  std::vector<double> taus;
  for (std::size_t k = 0;; ++k) {
    const double tau = rise + static_cast<double>(k) * dt_s;
    if (tau > set - 1e-9 * dt_s) break;
    taus.push_back(tau);
  }
  if (taus.empty() || set - taus.back() > 1e-9 * dt_s) taus.push_back(set);

  std::vector<TrajectoryPoint> points;
  points.reserve(taus.size());
  for (double tau : taus) {
    const detail::Vec3 los = frame.line_of_sight(tau);
    TrajectoryPoint p;
    p.t_s = tau - rise;
    p.elevation_deg = std::clamp(std::asin(std::clamp(los[2], -1.0, 1.0)) * kRadToDeg, 0.0, 90.0);
    double az = std::atan2(los[0], los[1]) * kRadToDeg;
    if (az < 0.0) az += 360.0;
    p.azimuth_deg = az;
    p.slant_range_km = frame.range(tau);
    const detail::Vec3 before = frame.line_of_sight(tau - 0.5 * dt_s);
    const detail::Vec3 after = frame.line_of_sight(tau + 0.5 * dt_s);
    p.angular_rate_degps = detail::angle_between(before, after) / dt_s * kRadToDeg;
    points.push_back(p);
  }
  // Pin the crossing elevations to their nominal values.
  points.front().elevation_deg = start_elevation_deg;
  points.back().elevation_deg = end_elevation_deg;
  return points;
}

inline void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryPoint>& pass) {
  os << "t_s,elevation_deg,azimuth_deg,range_km,angrate_degps\n";
  for (const auto& p : pass) {
    os << format_fixed(p.t_s, 3) << ',' << format_fixed(p.elevation_deg, 6) << ','
       << format_fixed(p.azimuth_deg, 6) << ',' << format_fixed(p.slant_range_km, 6) << ','
       << format_fixed(p.angular_rate_degps, 6) << '\n';
  }
}

}  // namespace satqkd
