#pragma once

// Multi-day batches: one pipeline per scenario file, run concurrently.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <future>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "satqkd/core.hpp"
#include "satqkd/pipeline.hpp"
#include "satqkd/scenario.hpp"

namespace satqkd {

struct ScenarioOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> weather_offset_db;

  void apply(Scenario& s) const {
    if (seed) s.seed = *seed;
    if (weather_offset_db) s.weather_offset_db = *weather_offset_db;
    s.validate();
  }
};

struct BatchEntry {
  std::string id;
  double max_elevation_deg = 0.0;
  double weather_offset_db = 0.0;
  double min_range_km = 0.0;
  double duration_s = 0.0;
  std::uint64_t detections = 0;
  std::uint64_t sifted = 0;
  double qber = 0.0;
  double peak_sifted_rate_bps = 0.0;
  std::uint64_t final_key_bits = 0;
  std::string abort_reason;
};

inline BatchEntry summarize(const PassReport& r) {
  BatchEntry e;
  e.id = r.scenario.id;
  e.max_elevation_deg = r.scenario.pass.max_elevation_deg;
  e.weather_offset_db = r.scenario.weather_offset_db;
  e.duration_s = r.duration_s();
  e.detections = r.total_detections;
  e.sifted = r.total_sifted;
  e.qber = r.average_qber();
  e.final_key_bits = r.key.final_length;
  e.abort_reason = r.key.abort_reason;
  if (!r.series.empty()) {
    e.min_range_km = r.series.front().range_km;
    for (const auto& s : r.series) {
      e.min_range_km = std::min(e.min_range_km, s.range_km);
      if (s.duration_s >= 0.999 * r.scenario.pass.dt_s)
        e.peak_sifted_rate_bps = std::max(e.peak_sifted_rate_bps, s.sifted_rate_bps());
    }
  }
  return e;
}

/// Scenario files (`*.cfg`) of a directory, in name order.
inline std::vector<std::filesystem::path> scenario_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("scenario_cli", "not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".cfg") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

inline void write_batch_csv(std::ostream& os, const std::vector<BatchEntry>& entries) {
  os << "scenario_id,max_elevation_deg,weather_offset_db,min_range_km,duration_s,detections,sifted_bits,qber,"
        "peak_sifted_rate_bps,final_key_bits,abort_reason\n";
  for (const auto& e : entries) {
    os << e.id << ',' << format_fixed(e.max_elevation_deg, 3) << ',' << format_fixed(e.weather_offset_db, 3) << ','
       << format_fixed(e.min_range_km, 3) << ',' << format_fixed(e.duration_s, 3) << ',' << e.detections << ','
       << e.sifted << ',' << format_fixed(e.qber, 6) << ',' << format_fixed(e.peak_sifted_rate_bps, 3) << ','
       << e.final_key_bits << ',' << e.abort_reason << '\n';
  }
}

/// Runs every scenario in the directory. Each report goes to out_dir/<id>/
/// and the totals to out_dir/batch_summary.csv. Results do not depend on
/// the worker count.
inline std::vector<BatchEntry> run_batch(const std::filesystem::path& config_dir, const std::filesystem::path& out_dir,
                                         const ScenarioOverrides& overrides = {}, unsigned workers = 0) {
  const auto files = scenario_files(config_dir);
  std::vector<Scenario> scenarios;
  scenarios.reserve(files.size());
  for (const auto& f : files) {
    Scenario s = load_scenario(f);
    overrides.apply(s);
    for (const auto& other : scenarios)
      if (other.id == s.id) throw ConfigError("scenario_cli", "duplicate scenario id '" + s.id + "'");
    scenarios.push_back(std::move(s));
  }
  detail::ensure_directory(out_dir);

  if (workers == 0) workers = std::clamp(std::thread::hardware_concurrency(), 1U, 4U);
  workers = std::min<unsigned>(workers, std::max<std::size_t>(1, scenarios.size()));
  std::vector<BatchEntry> entries(scenarios.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < scenarios.size(); i = next++) {
      const PassReport r = run_scenario(scenarios[i]);
      emit_reports(r, out_dir / scenarios[i].id);
      entries[i] = summarize(r);
    }
  };
  std::vector<std::future<void>> pool;
  for (unsigned w = 0; w < workers; ++w) pool.push_back(std::async(std::launch::async, worker));
  std::exception_ptr failure;
  for (auto& f : pool) {
    try {
      f.get();
    } catch (...) {
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  detail::write_file(out_dir / "batch_summary.csv", [&](std::ostream& os) { write_batch_csv(os, entries); });
  return entries;
}

}  // namespace satqkd
