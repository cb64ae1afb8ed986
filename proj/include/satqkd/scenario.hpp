#pragma once

// Scenario configuration: every tunable of one pass simulation, read from and
// written to flat `key = value` text. One field table drives both directions,
// so emit followed by parse reproduces the scenario exactly.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>

#include "satqkd/apt_tracking.hpp"
#include "satqkd/core.hpp"
#include "satqkd/link_budget.hpp"
#include "satqkd/orbit_pass.hpp"
#include "satqkd/polarization.hpp"
#include "satqkd/postprocess/secure_key.hpp"
#include "satqkd/quantum_channel.hpp"

namespace satqkd {

struct PassWindow {
  double max_elevation_deg = 49.0;
  double start_elevation_deg = 15.0;
  double end_elevation_deg = 10.0;
  double dt_s = 1.0;
  bool operator==(const PassWindow&) const = default;
};

struct TrackingConfig {
  TrackingStageConfig coarse = default_coarse_stage();
  TrackingStageConfig fine = default_fine_stage();
  DisturbanceModel disturbance;
  bool operator==(const TrackingConfig&) const = default;
};

struct FiberConfig {
  double loss_db_per_km = 0.2;
  double source_rate_hz = 1e10;  // ideal single-photon source
  bool operator==(const FiberConfig&) const = default;
};

/// Hardware figures carried for reference; no model consumes them.
struct Metadata {
  double rf_uplink_bps = 1e6;
  double rf_downlink_bps = 4e6;
  double beacon_divergence_satellite_rad = 1.25e-3;
  double beacon_divergence_ground_rad = 0.9e-3;
  double laser_wavelength_nm = 848.6;
  double laser_wavelength_match_nm = 0.006;
  double laser_bandwidth_nm = 0.1;
  bool operator==(const Metadata&) const = default;
};

struct Scenario {
  std::string id = "default";
  std::uint64_t seed = 1;
  double weather_offset_db = 0.0;
  GroundStation station;
  OrbitConfig orbit;
  PassWindow pass;
  OpticsConfig optics;
  SourceConfig source;
  DetectorConfig detectors;
  PolarizationModel polarization;
  /// When > 0, the static polarization offset is recalibrated for each pass
  /// so the first sample shows this uncompensated contrast.
  double polarization_start_contrast = 0.0;
  TrackingConfig tracking;
  FiberConfig fiber;
  PostprocessOptions postprocess;
  /// Reconciliation efficiency assumed by the analytic rate model.
  double ec_efficiency_model = 1.3;
  Metadata metadata;

  void validate() const {
    station.validate();
    orbit.validate();
    optics.validate();
    source.validate();
    detectors.validate();
    polarization.validate();
    tracking.coarse.validate();
    tracking.fine.validate();
    tracking.disturbance.validate();
    if (optics.detector_efficiency != detectors.efficiency)
      throw ConfigError("scenario", "optics and detector efficiencies disagree");
    if (!(weather_offset_db >= 0.0)) throw ConfigError("scenario", "weather offset must be >= 0");
    if (!(pass.start_elevation_deg >= kMinOperatingElevationDeg && pass.end_elevation_deg >= kMinOperatingElevationDeg))
      throw ConfigError("scenario", "pass window below the 5 degree operating threshold");
    if (!(ec_efficiency_model >= 1.0)) throw ConfigError("scenario", "EC efficiency must be >= 1");
    if (!(postprocess.epsilon_bound > 0.0 && postprocess.epsilon_pa > 0.0))
      throw ConfigError("scenario", "epsilons must be > 0");
    if (postprocess.reconciliation.max_passes < 1) throw ConfigError("scenario", "need at least one EC pass");
  }
  bool operator==(const Scenario&) const = default;
};

/// Calls visitor(key, field) for every configurable field, in file order.
template <class S, class Visitor>
  requires std::is_same_v<std::remove_const_t<S>, Scenario>
void visit_fields(S& s, Visitor&& v) {
  v("scenario.id", s.id);
  v("scenario.seed", s.seed);
  v("scenario.weather_offset_db", s.weather_offset_db);
  v("station.latitude_deg", s.station.latitude_deg);
  v("station.longitude_deg", s.station.longitude_deg);
  v("station.altitude_m", s.station.altitude_m);
  v("orbit.altitude_km", s.orbit.altitude_km);
  v("orbit.orbital_speed_kmps", s.orbit.orbital_speed_kmps);
  v("orbit.earth_radius_km", s.orbit.earth_radius_km);
  v("pass.max_elevation_deg", s.pass.max_elevation_deg);
  v("pass.start_elevation_deg", s.pass.start_elevation_deg);
  v("pass.end_elevation_deg", s.pass.end_elevation_deg);
  v("pass.dt_s", s.pass.dt_s);
  v("optics.tx_aperture_m", s.optics.tx_aperture_m);
  v("optics.rx_aperture_m", s.optics.rx_aperture_m);
  v("optics.divergence_full_angle_rad", s.optics.divergence_full_angle_rad);
  v("optics.rx_optics_efficiency", s.optics.rx_optics_efficiency);
  v("optics.zenith_atm_loss_db", s.optics.zenith_atm_loss_db);
  v("source.pulse_rate_hz", s.source.pulse_rate_hz);
  v("source.mu_signal", s.source.mu_signal);
  v("source.mu_decoy", s.source.mu_decoy);
  v("source.mu_vacuum", s.source.mu_vacuum);
  v("source.p_signal", s.source.p_signal);
  v("source.p_decoy", s.source.p_decoy);
  v("source.p_vacuum", s.source.p_vacuum);
  v("source.intensity_fluctuation", s.source.intensity_fluctuation);
  v("detector.efficiency", s.detectors.efficiency);
  v("detector.dark_rate_hz", s.detectors.dark_rate_hz);
  v("detector.count", s.detectors.detector_count);
  v("detector.timing_jitter_sigma_s", s.detectors.timing_jitter_sigma_s);
  v("detector.gate_width_s", s.detectors.gate_width_s);
  v("detector.sync_jitter_sigma_s", s.detectors.sync_jitter_sigma_s);
  v("detector.pulse_period_s", s.detectors.pulse_period_s);
  v("detector.background_rate_hz", s.detectors.background_rate_hz);
  v("detector.second_half_background_factor", s.detectors.second_half_background_factor);
  v("detector.optical_error", s.detectors.optical_error);
  v("polarization.static_offset_deg", s.polarization.static_offset_deg);
  v("polarization.intrinsic_contrast", s.polarization.intrinsic_contrast);
  v("polarization.hwp_step_deg", s.polarization.hwp_step_deg);
  v("polarization.hwp_update_interval_s", s.polarization.hwp_update_interval_s);
  v("polarization.start_contrast", s.polarization_start_contrast);
  v("tracking.coarse.field_of_view_rad", s.tracking.coarse.field_of_view_rad);
  v("tracking.coarse.frame_rate_hz", s.tracking.coarse.frame_rate_hz);
  v("tracking.coarse.actuator_range_rad", s.tracking.coarse.actuator_range_rad);
  v("tracking.coarse.loop_gain", s.tracking.coarse.loop_gain);
  v("tracking.fine.field_of_view_rad", s.tracking.fine.field_of_view_rad);
  v("tracking.fine.frame_rate_hz", s.tracking.fine.frame_rate_hz);
  v("tracking.fine.actuator_range_rad", s.tracking.fine.actuator_range_rad);
  v("tracking.fine.loop_gain", s.tracking.fine.loop_gain);
  v("tracking.disturbance.bias_drift_amplitude_rad", s.tracking.disturbance.bias_drift_amplitude_rad);
  v("tracking.disturbance.bias_drift_period_s", s.tracking.disturbance.bias_drift_period_s);
  v("tracking.disturbance.jitter_rms_rad", s.tracking.disturbance.white_jitter_rms_rad);
  v("tracking.disturbance.jitter_correlation_time_s", s.tracking.disturbance.jitter_correlation_time_s);
  v("fiber.loss_db_per_km", s.fiber.loss_db_per_km);
  v("fiber.source_rate_hz", s.fiber.source_rate_hz);
  v("postprocess.epsilon_bound", s.postprocess.epsilon_bound);
  v("postprocess.epsilon_pa", s.postprocess.epsilon_pa);
  v("postprocess.ec_max_passes", s.postprocess.reconciliation.max_passes);
  v("postprocess.ec_block_error_target", s.postprocess.reconciliation.block_error_target);
  v("postprocess.ec_estimate_decay_floor", s.postprocess.reconciliation.estimate_decay_floor);
  v("postprocess.ec_efficiency_model", s.ec_efficiency_model);
  v("metadata.rf_uplink_bps", s.metadata.rf_uplink_bps);
  v("metadata.rf_downlink_bps", s.metadata.rf_downlink_bps);
  v("metadata.beacon_divergence_satellite_rad", s.metadata.beacon_divergence_satellite_rad);
  v("metadata.beacon_divergence_ground_rad", s.metadata.beacon_divergence_ground_rad);
  v("metadata.laser_wavelength_nm", s.metadata.laser_wavelength_nm);
  v("metadata.laser_wavelength_match_nm", s.metadata.laser_wavelength_match_nm);
  v("metadata.laser_bandwidth_nm", s.metadata.laser_bandwidth_nm);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Parses flat `key = value` text on top of the built-in defaults. Blank
/// lines and `#` comments are ignored; unknown or repeated keys are errors.
inline Scenario parse_scenario(std::string_view text) {
  std::map<std::string, std::string, std::less<>> values;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config", "line " + std::to_string(line_no) + ": expected key = value");
    std::string key(detail::trim(line.substr(0, eq)));
    std::string value(detail::trim(line.substr(eq + 1)));
    if (!values.emplace(key, value).second) throw ConfigError("config", "duplicate key '" + key + "'");
  }

  Scenario s;
  visit_fields(s, [&](std::string_view key, auto& field) {
    const auto it = values.find(key);
    if (it == values.end()) return;
    using T = std::remove_reference_t<decltype(field)>;
    if constexpr (std::is_same_v<T, std::string>) {
      field = it->second;
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      field = parse_u64(it->second, key);
    } else if constexpr (std::is_same_v<T, int>) {
      field = static_cast<int>(parse_u64(it->second, key));
    } else {
      field = parse_double(it->second, key);
    }
    values.erase(it);
  });
  if (!values.empty()) throw ConfigError("config", "unknown key '" + values.begin()->first + "'");
  s.optics.detector_efficiency = s.detectors.efficiency;
  s.validate();
  return s;
}

inline std::string emit_scenario(const Scenario& s) {
  std::ostringstream os;
  visit_fields(s, [&](std::string_view key, const auto& field) {
    using T = std::remove_cvref_t<decltype(field)>;
    os << key << " = ";
    if constexpr (std::is_same_v<T, std::string> || std::is_integral_v<T>) {
      os << field;
    } else {
      os << format_double(field);
    }
    os << '\n';
  });
  return os.str();
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config", "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(e.module(), path.string() + ": " + e.message());
  }
}

}  // namespace satqkd
