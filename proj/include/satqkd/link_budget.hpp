#pragma once

#include <cmath>
#include <ostream>
#include <vector>

#include "satqkd/apt_tracking.hpp"
#include "satqkd/core.hpp"
#include "satqkd/orbit_pass.hpp"

namespace satqkd {

/// Lowest elevation at which the link budget is defined (attitude acquisition threshold).
inline constexpr double kMinOperatingElevationDeg = 5.0;

struct OpticsConfig {
  double tx_aperture_m = 0.3;
  double rx_aperture_m = 1.0;
  double divergence_full_angle_rad = 10e-6;  // 1/e^2 full angle
  double rx_optics_efficiency = 0.16;        // telescope + fiber coupling
  double detector_efficiency = 0.5;
  double zenith_atm_loss_db = 2.0;

  void validate() const {
    if (!(tx_aperture_m > 0.0 && rx_aperture_m > 0.0)) throw ConfigError("link_budget", "apertures must be > 0");
    if (!(divergence_full_angle_rad > 0.0)) throw ConfigError("link_budget", "divergence must be > 0");
    if (!(rx_optics_efficiency > 0.0 && rx_optics_efficiency <= 1.0))
      throw ConfigError("link_budget", "rx optics efficiency outside (0, 1]");
    if (!(detector_efficiency > 0.0 && detector_efficiency <= 1.0))
      throw ConfigError("link_budget", "detector efficiency outside (0, 1]");
    if (!(zenith_atm_loss_db >= 0.0)) throw ConfigError("link_budget", "zenith loss must be >= 0");
  }
  [[nodiscard]] double beam_half_angle_rad() const { return 0.5 * divergence_full_angle_rad; }
  bool operator==(const OpticsConfig&) const = default;
};

/// Loss ledger for one trajectory point, all terms in dB.
struct LinkBudget {
  double diffraction_db = 0.0;
  double atmosphere_db = 0.0;
  double pointing_db = 0.0;
  double rx_optics_db = 0.0;
  double detector_db = 0.0;
  double channel_total_db = 0.0;  // transmitter output to detector input
  double end_to_end_db = 0.0;

  [[nodiscard]] double end_to_end_efficiency() const { return db_to_linear(end_to_end_db); }
  [[nodiscard]] double channel_efficiency() const { return db_to_linear(channel_total_db); }
};

inline double beam_diameter_m(double range_km, const OpticsConfig& optics) {
  return optics.tx_aperture_m + optics.divergence_full_angle_rad * range_km * 1e3;
}

inline double diffraction_loss(double range_km, const OpticsConfig& optics) {
  const double beam = beam_diameter_m(range_km, optics);
  const double ratio = optics.rx_aperture_m / beam;
  const double fraction = std::min(1.0, ratio * ratio);
  return fraction >= 1.0 ? 0.0 : linear_to_db(fraction);
}

/// Plane-parallel airmass model.
inline double atmospheric_loss(double elevation_deg, double zenith_atm_loss_db) {
  if (!(elevation_deg >= kMinOperatingElevationDeg && elevation_deg <= 90.0))
    throw DomainError("link_budget", "elevation outside the operating envelope [5, 90] degrees");
  if (elevation_deg == 90.0) return zenith_atm_loss_db;
  return zenith_atm_loss_db / std::sin(elevation_deg * kDegToRad);
}

/// weather_offset_db is added to the atmospheric term.
inline LinkBudget total_link_efficiency(const TrajectoryPoint& point, const OpticsConfig& optics,
                                        double jitter_rms_rad, double weather_offset_db = 0.0) {
  if (!(point.slant_range_km > 0.0)) throw DomainError("link_budget", "slant range must be > 0");
  if (!(weather_offset_db >= 0.0)) throw DomainError("link_budget", "weather offset must be >= 0");
  LinkBudget b;
  b.diffraction_db = diffraction_loss(point.slant_range_km, optics);
  b.atmosphere_db = atmospheric_loss(point.elevation_deg, optics.zenith_atm_loss_db) + weather_offset_db;
  b.pointing_db = linear_to_db(pointing_transmission_factor(jitter_rms_rad, optics.beam_half_angle_rad()));
  b.rx_optics_db = linear_to_db(optics.rx_optics_efficiency);
  b.detector_db = linear_to_db(optics.detector_efficiency);
  b.channel_total_db = b.diffraction_db + b.atmosphere_db + b.pointing_db + b.rx_optics_db;
  b.end_to_end_db = b.channel_total_db + b.detector_db;
  return b;
}

inline std::vector<LinkBudget> pass_budget(const std::vector<TrajectoryPoint>& pass, const OpticsConfig& optics,
                                           double jitter_rms_rad, double weather_offset_db = 0.0) {
  std::vector<LinkBudget> out;
  out.reserve(pass.size());
  for (const auto& p : pass) out.push_back(total_link_efficiency(p, optics, jitter_rms_rad, weather_offset_db));
  return out;
}

struct FiberComparison {
  double fiber_loss_db = 0.0;
  double seconds_per_sifted_bit = 0.0;
  double advantage_orders = 0.0;
};

/// Direct fiber transmission with an ideal source and detectors; half the
/// detections survive basis sifting. advantage_orders compares against the
/// satellite channel loss at the same distance.
inline FiberComparison fiber_comparison(double length_km, double fiber_loss_db_per_km, double source_rate_hz,
                                        double satellite_channel_db) {
  if (!(length_km > 0.0 && fiber_loss_db_per_km > 0.0 && source_rate_hz > 0.0))
    throw DomainError("link_budget", "fiber comparison arguments must be > 0");
  FiberComparison f;
  f.fiber_loss_db = fiber_loss_db_per_km * length_km;
  // 10^(-loss/10) underflows past ~3000 dB; keep the rate in log space.
  const double log10_rate = std::log10(0.5 * source_rate_hz) - f.fiber_loss_db / 10.0;
  f.seconds_per_sifted_bit = std::pow(10.0, -log10_rate);
  f.advantage_orders = (f.fiber_loss_db - satellite_channel_db) / 10.0;
  return f;
}

inline void write_budget_csv(std::ostream& os, const std::vector<TrajectoryPoint>& pass,
                             const std::vector<LinkBudget>& budgets) {
  os << "t_s,range_km,elevation_deg,diffraction_db,atmosphere_db,pointing_db,rx_optics_db,detector_db,"
        "channel_total_db,end_to_end_db\n";
  for (std::size_t i = 0; i < pass.size() && i < budgets.size(); ++i) {
    const auto& p = pass[i];
    const auto& b = budgets[i];
    os << format_fixed(p.t_s, 3) << ',' << format_fixed(p.slant_range_km, 6) << ','
       << format_fixed(p.elevation_deg, 6) << ',' << format_fixed(b.diffraction_db, 6) << ','
       << format_fixed(b.atmosphere_db, 6) << ',' << format_fixed(b.pointing_db, 6) << ','
       << format_fixed(b.rx_optics_db, 6) << ',' << format_fixed(b.detector_db, 6) << ','
       << format_fixed(b.channel_total_db, 6) << ',' << format_fixed(b.end_to_end_db, 6) << '\n';
  }
}

}  // namespace satqkd
