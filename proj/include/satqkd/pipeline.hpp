#pragma once

// One-pass pipeline: geometry, tracking, link budget, polarization, photon
// counting and key post-processing, plus the report files it produces.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "satqkd/apt_tracking.hpp"
#include "satqkd/core.hpp"
#include "satqkd/link_budget.hpp"
#include "satqkd/orbit_pass.hpp"
#include "satqkd/polarization.hpp"
#include "satqkd/postprocess/key_io.hpp"
#include "satqkd/postprocess/secure_key.hpp"
#include "satqkd/quantum_channel.hpp"
#include "satqkd/scenario.hpp"

namespace satqkd {

// Seed streams derived from the scenario seed.
inline constexpr std::uint64_t kTrackingStream = 0x7A;
inline constexpr std::uint64_t kChannelStream = 0xC4;
inline constexpr std::uint64_t kPostprocessStream = 0x9F;

/// Deterministic part of a pass: everything up to the photon-counting
/// channel, without Monte Carlo sampling of detections.
struct LinkState {
  std::vector<TrajectoryPoint> pass;
  TrackingTrace tracking;
  double jitter_rms_rad = 0.0;  // effective per-axis value fed to the budget
  double jitter_rms_x_rad = 0.0;
  double jitter_rms_y_rad = 0.0;
  std::vector<LinkBudget> budgets;
  PolarizationModel polarization;  // with the calibrated static offset
  std::vector<ContrastSample> contrast;
  std::vector<double> e_pol;
  std::vector<SliceChannel> channels;
  std::vector<double> durations;
};

struct RunOptions {
  bool keep_tracking_trace = false;
  bool keep_events = false;
};

/// A pass that never reaches the start elevation yields an empty LinkState.
inline LinkState prepare_link(const Scenario& s, const RunOptions& options = {}) {
  s.validate();
  LinkState link;
  link.polarization = s.polarization;
  const auto& w = s.pass;
  if (w.max_elevation_deg < w.start_elevation_deg) return link;
  link.pass = generate_pass(w.max_elevation_deg, w.start_elevation_deg, w.end_elevation_deg, w.dt_s, s.orbit);

  const double duration = link.pass.back().t_s - link.pass.front().t_s;
  if (duration > 0.0) {
    DisturbanceModel disturbance = s.tracking.disturbance;
    disturbance.seed = mix_seed(s.seed, kTrackingStream);
    link.tracking = simulate_two_stage_tracking(duration, s.tracking.coarse, s.tracking.fine, disturbance);
    link.jitter_rms_rad = link.tracking.effective_rms();
    std::tie(link.jitter_rms_x_rad, link.jitter_rms_y_rad) = link.tracking.rms();
    if (!options.keep_tracking_trace) {
      link.tracking.samples.clear();
      link.tracking.samples.shrink_to_fit();
    }
  }

  link.budgets = pass_budget(link.pass, s.optics, link.jitter_rms_rad, s.weather_offset_db);

  if (s.polarization_start_contrast > 0.0)
    link.polarization.static_offset_deg =
        calibrate_static_offset(link.pass, s.polarization, s.polarization_start_contrast);
  link.contrast = contrast_series(link.pass, link.polarization, true);
  link.e_pol.reserve(link.contrast.size());
  for (const auto& c : link.contrast) link.e_pol.push_back(contrast_to_qber(c.contrast_compensated));

  link.channels = slice_channels(link.pass, link.budgets, link.e_pol, s.detectors);
  link.durations = slice_durations(link.pass);
  return link;
}

struct PassSlice {
  double t_s = 0.0;
  double duration_s = 0.0;
  double range_km = 0.0;
  double elevation_deg = 0.0;
  double channel_total_db = 0.0;
  double end_to_end_db = 0.0;
  double contrast = 0.0;
  std::uint64_t detections = 0;
  std::uint64_t sifted = 0;
  std::uint64_t sifted_errors = 0;

  [[nodiscard]] double detection_rate_hz() const { return duration_s > 0.0 ? detections / duration_s : 0.0; }
  [[nodiscard]] double sifted_rate_bps() const { return duration_s > 0.0 ? sifted / duration_s : 0.0; }
  [[nodiscard]] double qber() const {
    return sifted ? static_cast<double>(sifted_errors) / static_cast<double>(sifted) : 0.0;
  }
};

struct FiberRow {
  double distance_km = 0.0;
  double satellite_channel_db = 0.0;
  FiberComparison fiber;
};

struct PassReport {
  Scenario scenario;  // effective configuration, including overrides
  LinkState link;
  std::vector<PassSlice> series;
  std::vector<SliceTally> tallies;
  std::vector<DetectionEvent> events;  // only with RunOptions::keep_events
  SecureKeyResult key;
  std::vector<FiberRow> fiber;

  std::uint64_t total_detections = 0;
  std::uint64_t total_sifted = 0;
  std::uint64_t total_sifted_errors = 0;

  [[nodiscard]] double average_qber() const {
    return total_sifted ? static_cast<double>(total_sifted_errors) / static_cast<double>(total_sifted) : 0.0;
  }
  [[nodiscard]] double duration_s() const {
    return link.pass.empty() ? 0.0 : link.pass.back().t_s - link.pass.front().t_s;
  }
};

/// Fiber versus satellite over the pass's range interval: every multiple of
/// 50 km inside it plus both endpoints.
inline std::vector<FiberRow> fiber_table(const Scenario& s, const LinkState& link, double step_km = 50.0) {
  std::vector<FiberRow> rows;
  if (link.pass.empty()) return rows;
  double lo = link.pass.front().slant_range_km;
  double hi = lo;
  for (const auto& p : link.pass) {
    lo = std::min(lo, p.slant_range_km);
    hi = std::max(hi, p.slant_range_km);
  }
  std::vector<double> distances{lo};
  for (double d = std::ceil(lo / step_km) * step_km; d < hi; d += step_km)
    if (d > lo) distances.push_back(d);
  if (hi > lo) distances.push_back(hi);

  for (double d : distances) {
    TrajectoryPoint p;
    p.slant_range_km = d;
    p.elevation_deg = std::clamp(elevation_of_range(d, s.orbit), kMinOperatingElevationDeg, 90.0);
    const LinkBudget b = total_link_efficiency(p, s.optics, link.jitter_rms_rad, s.weather_offset_db);
    rows.push_back({d, b.channel_total_db,
                    fiber_comparison(d, s.fiber.loss_db_per_km, s.fiber.source_rate_hz, b.channel_total_db)});
  }
  return rows;
}

inline PassReport run_scenario(const Scenario& s, const RunOptions& options = {}) {
  PassReport r;
  r.scenario = s;
  r.link = prepare_link(s, options);
  r.fiber = fiber_table(s, r.link);
  if (r.link.pass.empty()) {
    r.key.abort_reason = "no pass above the start elevation";
    return r;
  }

  ChannelOutput channel =
      sample_pass_detections(r.link.pass, r.link.channels, s.source, s.detectors, mix_seed(s.seed, kChannelStream));
  const SiftedKey sifted = sift(channel.tx_records, channel.events);

  r.series.resize(r.link.pass.size());
  for (std::size_t i = 0; i < r.series.size(); ++i) {
    auto& slice = r.series[i];
    const auto& p = r.link.pass[i];
    slice.t_s = p.t_s;
    slice.duration_s = r.link.durations[i];
    slice.range_km = p.slant_range_km;
    slice.elevation_deg = p.elevation_deg;
    slice.channel_total_db = r.link.budgets[i].channel_total_db;
    slice.end_to_end_db = r.link.budgets[i].end_to_end_db;
    slice.contrast = r.link.contrast[i].contrast_compensated;
    for (auto d : channel.slices[i].detected) slice.detections += d;
  }
  auto slice_of = [&](std::uint64_t pulse) {
    const auto it = std::upper_bound(channel.slices.begin(), channel.slices.end(), pulse,
                                     [](std::uint64_t v, const SliceTally& t) { return v < t.first_pulse_index; });
    return static_cast<std::size_t>(it - channel.slices.begin()) - 1;
  };
  for (std::size_t k = 0; k < sifted.size(); ++k) {
    auto& slice = r.series[slice_of(sifted.source_indices[k])];
    ++slice.sifted;
    slice.sifted_errors += sifted.tx_bits[k] != sifted.rx_bits[k];
  }
  for (const auto& slice : r.series) {
    r.total_detections += slice.detections;
    r.total_sifted += slice.sifted;
    r.total_sifted_errors += slice.sifted_errors;
  }

  r.key = postprocess_key(sifted, tally_gain_statistics(channel.slices), s.source,
                          mix_seed(s.seed, kPostprocessStream), s.postprocess);
  r.tallies = std::move(channel.slices);
  if (options.keep_events) r.events = std::move(channel.events);
  return r;
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("scenario_cli", "cannot write " + path.string());
  return out;
}

inline void close_output(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw IoError("scenario_cli", "short write to " + path.string());
}

template <class Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
  auto out = open_output(path);
  writer(out);
  close_output(out, path);
}

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw IoError("scenario_cli", "cannot create directory " + dir.string());
}

}  // namespace detail

inline void write_pass_csv(std::ostream& os, const PassReport& r) {
  os << "t_s,duration_s,range_km,elevation_deg,channel_total_db,end_to_end_db,contrast_ratio,detections,"
        "detection_rate_hz,sifted_bits,sifted_rate_bps,qber\n";
  for (const auto& s : r.series) {
    os << format_fixed(s.t_s, 3) << ',' << format_fixed(s.duration_s, 6) << ',' << format_fixed(s.range_km, 6)
       << ',' << format_fixed(s.elevation_deg, 6) << ',' << format_fixed(s.channel_total_db, 6) << ','
       << format_fixed(s.end_to_end_db, 6) << ',' << format_fixed(s.contrast, 3) << ',' << s.detections << ','
       << format_fixed(s.detection_rate_hz(), 3) << ',' << s.sifted << ',' << format_fixed(s.sifted_rate_bps(), 3)
       << ',' << format_fixed(s.qber(), 6) << '\n';
  }
}

inline void write_fiber_csv(std::ostream& os, const std::vector<FiberRow>& rows) {
  os << "distance_km,fiber_loss_db,satellite_loss_db,fiber_seconds_per_sifted_bit,advantage_orders\n";
  for (const auto& row : rows) {
    os << format_fixed(row.distance_km, 3) << ',' << format_fixed(row.fiber.fiber_loss_db, 6) << ','
       << format_fixed(row.satellite_channel_db, 6) << ',' << format_double(row.fiber.seconds_per_sifted_bit)
       << ',' << format_fixed(row.fiber.advantage_orders, 6) << '\n';
  }
}

inline void write_summary(std::ostream& os, const PassReport& r) {
  const auto& k = r.key;
  os << "# pass summary\n"
     << "scenario_id = " << r.scenario.id << '\n'
     << "seed = " << r.scenario.seed << '\n'
     << "pass_duration_s = " << format_fixed(r.duration_s(), 3) << '\n'
     << "slices = " << r.series.size() << '\n'
     << "tracking_residual_rms_x_rad = " << format_double(r.link.jitter_rms_x_rad) << '\n'
     << "tracking_residual_rms_y_rad = " << format_double(r.link.jitter_rms_y_rad) << '\n'
     << "tracking_loss_of_lock = " << (r.link.tracking.loss_of_lock ? 1 : 0) << '\n'
     << "polarization_static_offset_deg = " << format_fixed(r.link.polarization.static_offset_deg, 6) << '\n'
     << "contrast_start_uncompensated = "
     << format_fixed(r.link.contrast.empty() ? 0.0 : r.link.contrast.front().contrast_uncompensated, 3) << '\n'
     << "contrast_mean_compensated = " << format_fixed(mean_contrast(r.link.contrast, true), 3) << '\n'
     << "detections = " << r.total_detections << '\n'
     << "sifted_bits = " << r.total_sifted << '\n'
     << "sifted_errors = " << r.total_sifted_errors << '\n'
     << "qber = " << format_fixed(r.average_qber(), 6) << '\n'
     << "y1_lower = " << format_double(k.bounds.y1_lower) << '\n'
     << "e1_upper = " << format_double(k.bounds.e1_upper) << '\n'
     << "q1_lower = " << format_double(k.bounds.q1_lower) << '\n'
     << "leak_ec_bits = " << k.leak_ec << '\n'
     << "reconciliation_passes = " << k.reconciliation_passes << '\n'
     << "final_key_bits = " << k.final_length << '\n'
     << "epsilon_total = " << format_double(k.epsilon_total) << '\n'
     << "abort_reason = " << k.abort_reason << '\n'
     << "\n# configuration\n"
     << emit_scenario(r.scenario);
}

struct EmitOptions {
  bool write_events = false;
  bool write_tracking = false;
};

/// Writes the report files into out_dir, replacing earlier runs.
inline void emit_reports(const PassReport& r, const std::filesystem::path& out_dir, const EmitOptions& options = {}) {
  detail::ensure_directory(out_dir);
  detail::write_file(out_dir / "pass.csv", [&](std::ostream& os) { write_pass_csv(os, r); });
  detail::write_file(out_dir / "summary.txt", [&](std::ostream& os) { write_summary(os, r); });
  detail::write_file(out_dir / "fiber_compare.csv", [&](std::ostream& os) { write_fiber_csv(os, r.fiber); });
  detail::write_file(out_dir / "trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, r.link.pass); });
  detail::write_file(out_dir / "budget.csv",
                     [&](std::ostream& os) { write_budget_csv(os, r.link.pass, r.link.budgets); });
  detail::write_file(out_dir / "contrast.csv", [&](std::ostream& os) { write_contrast_csv(os, r.link.contrast); });
  detail::write_file(out_dir / "tallies.csv", [&](std::ostream& os) {
    ChannelOutput view;
    view.slices = r.tallies;
    write_tally_csv(os, view);
  });
  detail::write_file(out_dir / "gain_stats.csv",
                     [&](std::ostream& os) { write_gain_statistics_csv(os, r.key.stats); });
  if (options.write_events) {
    detail::write_file(out_dir / "events.csv", [&](std::ostream& os) {
      ChannelOutput view;
      view.slices = r.tallies;
      view.events = r.events;
      write_events_csv(os, view);
    });
  }
  if (options.write_tracking)
    detail::write_file(out_dir / "tracking.csv", [&](std::ostream& os) { write_tracking_csv(os, r.link.tracking); });
  write_key_file(out_dir / "final_key", r.key.final_key_tx,
                 {r.key.final_length, r.key.epsilon_total, r.scenario.id, r.scenario.seed});
}

}  // namespace satqkd
