#pragma once

// Decoy-state BB84 source, lossy channel and gated detection.
//
// A pass sends ~10^10 pulses, so the channel is sampled detection-first: per
// time slice the number of clicks in each intensity class is drawn
// binomially, and only the clicked slots are materialized with attributes
// drawn from their exact conditional distributions.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include "satqkd/core.hpp"
#include "satqkd/link_budget.hpp"
#include "satqkd/orbit_pass.hpp"

namespace satqkd {

enum class Basis : std::uint8_t { rectilinear = 0, diagonal = 1 };
enum class IntensityClass : std::uint8_t { signal = 0, decoy = 1, vacuum = 2 };
enum class Origin : std::uint8_t { photonic = 0, background = 1 };

inline constexpr std::size_t kClassCount = 3;
inline constexpr std::array<IntensityClass, kClassCount> kAllClasses{IntensityClass::signal, IntensityClass::decoy,
                                                                     IntensityClass::vacuum};

inline const char* to_string(IntensityClass c) {
  switch (c) {
    case IntensityClass::signal: return "signal";
    case IntensityClass::decoy: return "decoy";
    case IntensityClass::vacuum: return "vacuum";
  }
  return "?";
}

struct SourceConfig {
  double pulse_rate_hz = 1e8;
  double mu_signal = 0.8;
  double mu_decoy = 0.1;
  double mu_vacuum = 0.0;
  double p_signal = 0.5;
  double p_decoy = 0.25;
  double p_vacuum = 0.25;
  double intensity_fluctuation = 0.05;

  void validate() const {
    if (!(pulse_rate_hz > 0.0)) throw ConfigError("quantum_channel", "pulse rate must be > 0");
    if (!(p_signal >= 0.0 && p_decoy >= 0.0 && p_vacuum >= 0.0) ||
        std::abs(p_signal + p_decoy + p_vacuum - 1.0) > 1e-9)
      throw ConfigError("quantum_channel", "class probabilities must be >= 0 and sum to 1");
    if (mu_vacuum != 0.0) throw ConfigError("quantum_channel", "vacuum intensity must be 0");
    if (!(mu_signal > mu_decoy && mu_decoy > mu_vacuum))
      throw ConfigError("quantum_channel", "intensities must satisfy mu_signal > mu_decoy > 0");
    if (!(intensity_fluctuation >= 0.0 && intensity_fluctuation < 1.0))
      throw ConfigError("quantum_channel", "intensity fluctuation outside [0, 1)");
  }
  [[nodiscard]] double mu(IntensityClass c) const {
    switch (c) {
      case IntensityClass::signal: return mu_signal;
      case IntensityClass::decoy: return mu_decoy;
      case IntensityClass::vacuum: return mu_vacuum;
    }
    return 0.0;
  }
  [[nodiscard]] double probability(IntensityClass c) const {
    switch (c) {
      case IntensityClass::signal: return p_signal;
      case IntensityClass::decoy: return p_decoy;
      case IntensityClass::vacuum: return p_vacuum;
    }
    return 0.0;
  }
  bool operator==(const SourceConfig&) const = default;
};

struct PulseRecord {
  std::uint64_t index = 0;
  Basis basis = Basis::rectilinear;
  std::uint8_t bit = 0;
  IntensityClass intensity = IntensityClass::signal;
  bool operator==(const PulseRecord&) const = default;
};

struct DetectorConfig {
  double efficiency = 0.5;
  double dark_rate_hz = 25.0;  // per detector
  int detector_count = 4;
  double timing_jitter_sigma_s = 0.35e-9;
  double gate_width_s = 2e-9;
  double sync_jitter_sigma_s = 0.529e-9;
  double pulse_period_s = 10e-9;
  double background_rate_hz = 0.0;  // stray light, all detectors combined
  /// Stray-light multiplier after closest approach, when the telescope faces the city.
  double second_half_background_factor = 1.0;
  /// Basis-independent bit-flip probability of the receiver optics, on top
  /// of the polarization misalignment.
  double optical_error = 0.0;

  void validate() const {
    if (!(efficiency > 0.0 && efficiency <= 1.0)) throw ConfigError("quantum_channel", "efficiency outside (0, 1]");
    if (!(dark_rate_hz >= 0.0 && background_rate_hz >= 0.0))
      throw ConfigError("quantum_channel", "count rates must be >= 0");
    if (detector_count < 1) throw ConfigError("quantum_channel", "need at least one detector");
    if (!(timing_jitter_sigma_s >= 0.0 && sync_jitter_sigma_s >= 0.0))
      throw ConfigError("quantum_channel", "jitters must be >= 0");
    if (!(gate_width_s > 0.0 && pulse_period_s > 0.0 && gate_width_s <= pulse_period_s))
      throw ConfigError("quantum_channel", "need 0 < gate width <= pulse period");
    if (!(second_half_background_factor >= 0.0))
      throw ConfigError("quantum_channel", "background factor must be >= 0");
    if (!(optical_error >= 0.0 && optical_error < 0.5))
      throw ConfigError("quantum_channel", "optical error outside [0, 0.5)");
  }
  bool operator==(const DetectorConfig&) const = default;
};

/// Detector ids 0..3 are (rect, 0), (rect, 1), (diag, 0), (diag, 1).
inline std::uint8_t detector_id(Basis basis, std::uint8_t bit) {
  return static_cast<std::uint8_t>(static_cast<std::uint8_t>(basis) * 2 + bit);
}
inline Basis detector_basis(std::uint8_t id) { return static_cast<Basis>(id >> 1); }
inline std::uint8_t detector_bit(std::uint8_t id) { return id & 1U; }

struct DetectionEvent {
  std::uint64_t pulse_index = 0;
  float timestamp_offset_s = 0.0F;
  std::uint8_t detector_id = 0;
  Origin origin = Origin::photonic;  // simulation truth, not protocol-visible
  bool double_click = false;
  bool operator==(const DetectionEvent&) const = default;
};

/// Hardware mapping of the 4-bit random code: bits 0-1 choose the BB84 state,
/// bits 2-3 the intensity (00, 01 signal; 10 decoy; 11 vacuum).
inline PulseRecord draw_pulse(unsigned random_code, std::uint64_t index = 0) {
  if (random_code > 15) throw DomainError("quantum_channel", "random code must be 4 bits");
  PulseRecord r;
  r.index = index;
  r.bit = static_cast<std::uint8_t>(random_code & 1U);
  r.basis = static_cast<Basis>((random_code >> 1) & 1U);
  switch ((random_code >> 2) & 3U) {
    case 0:
    case 1: r.intensity = IntensityClass::signal; break;
    case 2: r.intensity = IntensityClass::decoy; break;
    default: r.intensity = IntensityClass::vacuum; break;
  }
  return r;
}

struct DetectionProbabilities {
  double gain = 0.0;
  double error_rate = 0.0;
};

/// Standard decoy-state channel model for a Poissonian source.
inline DetectionProbabilities detection_probabilities(double mu, double eta, double y0, double e_pol,
                                                      double e0 = 0.5) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("quantum_channel", "eta outside [0, 1]");
  if (!(y0 >= 0.0 && y0 < 1.0)) throw DomainError("quantum_channel", "y0 outside [0, 1)");
  if (!(e_pol >= 0.0 && e_pol <= 0.5)) throw DomainError("quantum_channel", "e_pol outside [0, 0.5]");
  if (!(mu >= 0.0)) throw DomainError("quantum_channel", "mu must be >= 0");
  const double transmitted = -std::expm1(-eta * mu);
  DetectionProbabilities p;
  p.gain = y0 + transmitted - y0 * transmitted;
  p.error_rate = p.gain > 0.0 ? (e0 * y0 + e_pol * transmitted) / p.gain : e0;
  return p;
}

struct SyncAcceptance {
  double signal = 1.0;
  double background = 1.0;
};

/// Fraction of signal photons inside the coincidence window, and the fraction
/// of uniformly distributed background that the window admits.
inline SyncAcceptance synchronization_acceptance(const DetectorConfig& det) {
  SyncAcceptance a;
  a.background = det.gate_width_s / det.pulse_period_s;
  const double sigma = std::hypot(det.sync_jitter_sigma_s, det.timing_jitter_sigma_s);
  a.signal = sigma > 0.0 ? std::erf(0.5 * det.gate_width_s / (sigma * std::sqrt(2.0))) : 1.0;
  return a;
}

/// Probability of at least one background or dark click in one gate.
inline double background_click_probability(const DetectorConfig& det, double background_factor = 1.0) {
  const double rate = det.dark_rate_hz * det.detector_count + det.background_rate_hz * background_factor;
  return -std::expm1(-rate * det.gate_width_s);
}

struct SliceTally {
  double t_s = 0.0;
  double duration_s = 0.0;
  std::uint64_t first_pulse_index = 0;
  std::array<std::uint64_t, kClassCount> sent{};
  std::array<std::uint64_t, kClassCount> detected{};
  std::array<std::uint64_t, kClassCount> matched{};  // receiver basis equals sent basis
  std::array<std::uint64_t, kClassCount> errors{};   // among matched
};

struct ChannelOutput {
  std::vector<SliceTally> slices;
  std::vector<DetectionEvent> events;    // sorted by pulse index
  std::vector<PulseRecord> tx_records;  // the detected slots, aligned with events

  [[nodiscard]] std::uint64_t total_detections() const { return events.size(); }
};

/// Per-slice channel parameters after the link budget.
struct SliceChannel {
  double eta = 0.0;     // end-to-end efficiency including the coincidence window
  double y0 = 0.0;      // background click probability per gate
  double e_pol = 0.0;   // photonic bit-error probability (polarization and receiver optics)
};

/// Slice durations centred on the trajectory samples; they sum to the pass span.
inline std::vector<double> slice_durations(const std::vector<TrajectoryPoint>& pass) {
  std::vector<double> d(pass.size(), 0.0);
  if (pass.size() < 2) {
    if (!d.empty()) d[0] = 0.0;
    return d;
  }
  for (std::size_t i = 0; i < pass.size(); ++i) {
    const double lo = i == 0 ? pass[0].t_s : 0.5 * (pass[i - 1].t_s + pass[i].t_s);
    const double hi = i + 1 == pass.size() ? pass[i].t_s : 0.5 * (pass[i].t_s + pass[i + 1].t_s);
    d[i] = hi - lo;
  }
  return d;
}

inline std::vector<SliceChannel> slice_channels(const std::vector<TrajectoryPoint>& pass,
                                                const std::vector<LinkBudget>& budgets,
                                                std::span<const double> e_pol, const DetectorConfig& det) {
  if (budgets.size() != pass.size() || e_pol.size() != pass.size())
    throw ConfigError("quantum_channel", "budgets and polarization errors must align with the pass");
  const SyncAcceptance acc = synchronization_acceptance(det);
  std::size_t apex = 0;
  for (std::size_t i = 1; i < pass.size(); ++i)
    if (pass[i].elevation_deg > pass[apex].elevation_deg) apex = i;
  std::vector<SliceChannel> out(pass.size());
  for (std::size_t i = 0; i < pass.size(); ++i) {
    out[i].eta = budgets[i].end_to_end_efficiency() * acc.signal;
    out[i].y0 = background_click_probability(det, i > apex ? det.second_half_background_factor : 1.0);
    const double e = std::clamp(e_pol[i], 0.0, 0.5);
    out[i].e_pol = e * (1.0 - det.optical_error) + (1.0 - e) * det.optical_error;
  }
  return out;
}

namespace detail {

struct ClickOutcome {
  Basis tx_basis;
  std::uint8_t tx_bit;
  std::uint8_t detector;
  Origin origin;
  bool double_click;
  float timestamp;
};

/// Attributes of one click, conditioned on a click having happened in a slot
/// of mean photon number mu.
template <class Rng>
ClickOutcome sample_click(Rng& rng, double mu, const SliceChannel& ch, double gate_width, double sigma_t) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  ClickOutcome c{};
  const auto bits = rng();
  c.tx_basis = static_cast<Basis>(bits & 1U);
  c.tx_bit = static_cast<std::uint8_t>((bits >> 1) & 1U);
  const auto rx_basis = static_cast<Basis>((bits >> 2) & 1U);
  const auto random_bit = static_cast<std::uint8_t>((bits >> 3) & 1U);

  const double photon = -std::expm1(-ch.eta * mu);
  const double p_photon_only = photon * (1.0 - ch.y0);
  const double p_background_only = ch.y0 * (1.0 - photon);
  const double p_both = ch.y0 * photon;
  const double u = uni(rng) * (p_photon_only + p_background_only + p_both);

  auto photonic_timestamp = [&]() {
    if (sigma_t <= 0.0) return 0.0F;
    std::normal_distribution<double> n(0.0, sigma_t);
    for (;;) {
      const double t = n(rng);
      if (std::abs(t) <= 0.5 * gate_width) return static_cast<float>(t);
    }
  };

  if (u < p_photon_only) {
    c.origin = Origin::photonic;
    c.double_click = false;
    std::uint8_t bit = random_bit;
    if (rx_basis == c.tx_basis) bit = static_cast<std::uint8_t>(c.tx_bit ^ (uni(rng) < ch.e_pol ? 1U : 0U));
    c.detector = detector_id(rx_basis, bit);
    c.timestamp = photonic_timestamp();
  } else if (u < p_photon_only + p_background_only) {
    c.origin = Origin::background;
    c.double_click = false;
    c.detector = static_cast<std::uint8_t>((bits >> 4) & 3U);
    c.timestamp = static_cast<float>((uni(rng) - 0.5) * gate_width);
  } else {
    // Photon and background in the same gate: squashed to one event with a
    // random bit in the measured basis.
    c.origin = Origin::photonic;
    c.double_click = true;
    c.detector = detector_id(rx_basis, random_bit);
    c.timestamp = photonic_timestamp();
  }
  return c;
}

/// k distinct sorted offsets drawn uniformly from [0, n).
template <class Rng>
std::vector<std::uint64_t> distinct_offsets(Rng& rng, std::uint64_t n, std::uint64_t k) {
  std::vector<std::uint64_t> out;
  out.reserve(k);
  std::uniform_int_distribution<std::uint64_t> pick(0, n - 1);
  while (out.size() < k) {
    while (out.size() < k) out.push_back(pick(rng));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  return out;
}

}  // namespace detail

/// Samples every slice of a pass. Slice i uses its own generator seeded from
/// (seed, i), so slices are independent of processing order.
inline ChannelOutput sample_pass_detections(const std::vector<TrajectoryPoint>& pass,
                                            const std::vector<SliceChannel>& channels, const SourceConfig& source,
                                            const DetectorConfig& det, std::uint64_t seed) {
  if (pass.empty()) throw ConfigError("quantum_channel", "empty pass");
  if (channels.size() != pass.size()) throw ConfigError("quantum_channel", "channel slices must align with the pass");
  source.validate();
  det.validate();

  const auto durations = slice_durations(pass);
  const double sigma_t = std::hypot(det.sync_jitter_sigma_s, det.timing_jitter_sigma_s);

  ChannelOutput out;
  out.slices.resize(pass.size());
  std::uint64_t next_index = 0;
  for (std::size_t i = 0; i < pass.size(); ++i) {
    std::mt19937_64 rng(mix_seed(seed, i));
    SliceTally& tally = out.slices[i];
    tally.t_s = pass[i].t_s;
    tally.duration_s = durations[i];
    tally.first_pulse_index = next_index;
    const auto n_pulses = static_cast<std::uint64_t>(std::llround(source.pulse_rate_hz * durations[i]));
    next_index += n_pulses;
    if (n_pulses == 0) continue;

    // Multinomial split of the slots over the intensity classes.
    std::binomial_distribution<std::uint64_t> b_signal(n_pulses, source.p_signal);
    tally.sent[0] = b_signal(rng);
    const double p_decoy_rest = source.p_decoy + source.p_vacuum > 0.0
                                    ? source.p_decoy / (source.p_decoy + source.p_vacuum)
                                    : 0.0;
    std::binomial_distribution<std::uint64_t> b_decoy(n_pulses - tally.sent[0], std::min(1.0, p_decoy_rest));
    tally.sent[1] = b_decoy(rng);
    tally.sent[2] = n_pulses - tally.sent[0] - tally.sent[1];

    std::uniform_real_distribution<double> fluct(-source.intensity_fluctuation, source.intensity_fluctuation);
    std::array<double, kClassCount> mu{};
    for (std::size_t c = 0; c < kClassCount; ++c) {
      const double nominal = source.mu(kAllClasses[c]);
      const double f = fluct(rng);
      mu[c] = nominal * (1.0 + f);
    }

    std::vector<std::uint8_t> labels;
    for (std::size_t c = 0; c < kClassCount; ++c) {
      const double q = detection_probabilities(mu[c], channels[i].eta, channels[i].y0, channels[i].e_pol).gain;
      std::binomial_distribution<std::uint64_t> clicks(tally.sent[c], q);
      tally.detected[c] = clicks(rng);
      labels.insert(labels.end(), tally.detected[c], static_cast<std::uint8_t>(c));
    }
    std::shuffle(labels.begin(), labels.end(), rng);
    const auto offsets = detail::distinct_offsets(rng, n_pulses, labels.size());

    for (std::size_t k = 0; k < labels.size(); ++k) {
      const std::size_t c = labels[k];
      const auto click = detail::sample_click(rng, mu[c], channels[i], det.gate_width_s, sigma_t);
      const std::uint64_t index = tally.first_pulse_index + offsets[k];
      out.tx_records.push_back({index, click.tx_basis, click.tx_bit, kAllClasses[c]});
      out.events.push_back({index, click.timestamp, click.detector, click.origin, click.double_click});
      if (detector_basis(click.detector) == click.tx_basis) {
        ++tally.matched[c];
        if (detector_bit(click.detector) != click.tx_bit) ++tally.errors[c];
      }
    }
  }
  return out;
}

/// Convenience form taking the link budget and per-slice polarization errors.
inline ChannelOutput sample_pass_detections(const std::vector<TrajectoryPoint>& pass,
                                            const std::vector<LinkBudget>& budgets, std::span<const double> e_pol,
                                            const SourceConfig& source, const DetectorConfig& det,
                                            std::uint64_t seed) {
  if (pass.empty()) throw ConfigError("quantum_channel", "empty pass");
  return sample_pass_detections(pass, slice_channels(pass, budgets, e_pol, det), source, det, seed);
}

inline void write_events_csv(std::ostream& os, const ChannelOutput& ch) {
  os << "slice_t_s,pulse_index,detector_id,origin_hidden_flag\n";
  std::size_t slice = 0;
  for (const auto& e : ch.events) {
    while (slice + 1 < ch.slices.size() && e.pulse_index >= ch.slices[slice + 1].first_pulse_index) ++slice;
    os << format_fixed(ch.slices[slice].t_s, 3) << ',' << e.pulse_index << ','
       << static_cast<int>(e.detector_id) << ',' << (e.origin == Origin::background ? 1 : 0) << '\n';
  }
}

inline void write_tally_csv(std::ostream& os, const ChannelOutput& ch) {
  os << "t_s,duration_s,sent_signal,sent_decoy,sent_vacuum,detected_signal,detected_decoy,detected_vacuum,"
        "errors_signal,errors_decoy,errors_vacuum\n";
  for (const auto& s : ch.slices) {
    os << format_fixed(s.t_s, 3) << ',' << format_fixed(s.duration_s, 6);
    for (auto v : s.sent) os << ',' << v;
    for (auto v : s.detected) os << ',' << v;
    for (auto v : s.errors) os << ',' << v;
    os << '\n';
  }
}

}  // namespace satqkd
