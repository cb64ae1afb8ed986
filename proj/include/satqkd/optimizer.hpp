#pragma once

// Source-parameter search on the analytic (expected-value) rate model.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "satqkd/core.hpp"
#include "satqkd/pipeline.hpp"
#include "satqkd/postprocess/decoy.hpp"
#include "satqkd/postprocess/secure_key.hpp"
#include "satqkd/quantum_channel.hpp"
#include "satqkd/scenario.hpp"

namespace satqkd {

/// Expected class tallies of a pass, from the per-slice channel parameters.
/// Half of all detections land in the matching basis.
inline GainStatistics expected_gain_statistics(const std::vector<SliceChannel>& channels,
                                               const std::vector<double>& durations, const SourceConfig& source) {
  std::array<double, kClassCount> sent{};
  std::array<double, kClassCount> detected{};
  std::array<double, kClassCount> errors{};
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const double pulses = source.pulse_rate_hz * durations[i];
    for (std::size_t c = 0; c < kClassCount; ++c) {
      const double n = pulses * source.probability(kAllClasses[c]);
      const auto p = detection_probabilities(source.mu(kAllClasses[c]), channels[i].eta, channels[i].y0,
                                             channels[i].e_pol);
      sent[c] += n;
      detected[c] += n * p.gain;
      errors[c] += 0.5 * n * p.error_rate * p.gain;
    }
  }
  GainStatistics g;
  for (std::size_t c = 0; c < kClassCount; ++c) {
    g.sent[c] = static_cast<std::uint64_t>(std::llround(sent[c]));
    g.detected[c] = static_cast<std::uint64_t>(std::llround(detected[c]));
    g.matched[c] = static_cast<std::uint64_t>(std::llround(0.5 * detected[c]));
    g.errors[c] = static_cast<std::uint64_t>(std::llround(errors[c]));
  }
  return g;
}

/// Expected final key length of a pass for the given source settings.
inline double expected_key_length(const LinkState& link, const SourceConfig& source,
                                  const PostprocessOptions& options, double ec_efficiency) {
  if (link.channels.empty()) return 0.0;
  const GainStatistics g = expected_gain_statistics(link.channels, link.durations, source);
  const std::uint64_t n_sifted = g.matched[0];
  if (n_sifted == 0 || g.sent[1] == 0 || g.sent[2] == 0) return 0.0;
  const DecoyBounds bounds = decoy_bounds(g, source, options.epsilon_bound);
  if (bounds.abort) return 0.0;
  const double qber = g.error_rate(IntensityClass::signal);
  if (qber >= 0.11) return 0.0;
  const double leak = ec_efficiency * binary_entropy(qber) * static_cast<double>(n_sifted);
  return static_cast<double>(secure_key_length(n_sifted, bounds, g, leak, options.epsilon_pa));
}

struct GridRange {
  double lo = 0.0;
  double hi = 0.0;
  double step = 0.0;

  [[nodiscard]] std::vector<double> values() const {
    std::vector<double> v;
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long k = 0; k <= n; ++k) v.push_back(lo + static_cast<double>(k) * step);
    return v;
  }
};

struct SearchRanges {
  GridRange mu_signal{0.3, 1.5, 0.05};
  GridRange mu_decoy{0.02, 0.3, 0.01};
  GridRange p_signal{0.3, 0.9, 0.05};
  GridRange p_decoy{0.05, 0.5, 0.05};

  void validate() const {
    for (const GridRange* r : {&mu_signal, &mu_decoy, &p_signal, &p_decoy}) {
      if (!(r->lo <= r->hi)) throw ConfigError("scenario_cli", "empty search range");
      if (!(r->step > 0.0)) throw ConfigError("scenario_cli", "search step must be > 0");
      if (!(r->lo >= 0.0)) throw ConfigError("scenario_cli", "search range must be >= 0");
    }
    if (mu_signal.hi > 1.5) throw ConfigError("scenario_cli", "signal intensity range must stay <= 1.5");
  }
};

struct OptimizationResult {
  SourceConfig best;
  double key_length = 0.0;  // expected final bits per pass
  bool key_possible = false;
  std::size_t evaluations = 0;
};

namespace detail {

inline bool feasible_source(const SourceConfig& s) {
  return s.mu_decoy < s.mu_signal && s.p_signal + s.p_decoy < 1.0 - 1e-12;
}

inline std::size_t nearest_index(const std::vector<double>& grid, double value) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (std::abs(grid[i] - value) < std::abs(grid[best] - value)) best = i;
  return best;
}

}  // namespace detail

/// Coordinate descent over the four source parameters, each on its grid.
/// The returned point is at least as good as every neighbour along each axis.
inline OptimizationResult optimize_source_parameters(const LinkState& link, const SourceConfig& start,
                                                     const PostprocessOptions& options, double ec_efficiency,
                                                     const SearchRanges& ranges = {}) {
  ranges.validate();
  const std::array<std::vector<double>, 4> grids{ranges.mu_signal.values(), ranges.mu_decoy.values(),
                                                 ranges.p_signal.values(), ranges.p_decoy.values()};
  auto make = [&](const std::array<std::size_t, 4>& idx) {
    SourceConfig s = start;
    s.mu_signal = grids[0][idx[0]];
    s.mu_decoy = grids[1][idx[1]];
    s.p_signal = grids[2][idx[2]];
    s.p_decoy = grids[3][idx[3]];
    s.p_vacuum = 1.0 - s.p_signal - s.p_decoy;
    return s;
  };
  OptimizationResult result;
  auto evaluate = [&](const std::array<std::size_t, 4>& idx) -> std::optional<double> {
    const SourceConfig s = make(idx);
    if (!detail::feasible_source(s)) return std::nullopt;
    ++result.evaluations;
    return expected_key_length(link, s, options, ec_efficiency);
  };

  std::array<std::size_t, 4> idx{detail::nearest_index(grids[0], start.mu_signal),
                                 detail::nearest_index(grids[1], start.mu_decoy),
                                 detail::nearest_index(grids[2], start.p_signal),
                                 detail::nearest_index(grids[3], start.p_decoy)};
  std::optional<double> current = evaluate(idx);
  if (!current) {
    // Start outside the feasible region: take the first feasible grid point.
    for (std::size_t a = 0; a < grids[0].size() && !current; ++a)
      for (std::size_t b = 0; b < grids[1].size() && !current; ++b)
        for (std::size_t c = 0; c < grids[2].size() && !current; ++c)
          for (std::size_t d = 0; d < grids[3].size() && !current; ++d)
            if ((current = evaluate({a, b, c, d}))) idx = {a, b, c, d};
    if (!current) throw ConfigError("scenario_cli", "no feasible source parameters in the search ranges");
  }

  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t axis = 0; axis < 4; ++axis) {
      for (std::size_t k = 0; k < grids[axis].size(); ++k) {
        if (k == idx[axis]) continue;
        auto trial = idx;
        trial[axis] = k;
        const auto value = evaluate(trial);
        if (value && *value > *current) {
          current = value;
          idx = trial;
          improved = true;
        }
      }
    }
  }
  result.best = make(idx);
  result.key_length = *current;
  result.key_possible = *current > 0.0;
  return result;
}

inline OptimizationResult optimize_source_parameters(const Scenario& s, const SearchRanges& ranges = {}) {
  return optimize_source_parameters(prepare_link(s), s.source, s.postprocess, s.ec_efficiency_model, ranges);
}

inline void write_optimization(std::ostream& os, const Scenario& s, const OptimizationResult& r) {
  os << "# source parameter optimization\n"
     << "scenario_id = " << s.id << '\n'
     << "seed = " << s.seed << '\n';
  if (!r.key_possible) {
    os << "result = no key possible\n";
    return;
  }
  os << "result = ok\n"
     << "mu_signal = " << format_fixed(r.best.mu_signal, 4) << '\n'
     << "mu_decoy = " << format_fixed(r.best.mu_decoy, 4) << '\n'
     << "p_signal = " << format_fixed(r.best.p_signal, 4) << '\n'
     << "p_decoy = " << format_fixed(r.best.p_decoy, 4) << '\n'
     << "p_vacuum = " << format_fixed(r.best.p_vacuum, 4) << '\n'
     << "expected_final_key_bits = " << format_fixed(r.key_length, 0) << '\n'
     << "evaluations = " << r.evaluations << '\n';
}

}  // namespace satqkd
