#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "satqkd/core.hpp"
#include "satqkd/quantum_channel.hpp"

namespace satqkd {

using Bits = std::vector<std::uint8_t>;  // one bit per byte, values 0/1

struct SiftedKey {
  Bits tx_bits;
  Bits rx_bits;
  std::vector<std::uint64_t> source_indices;
  std::vector<Basis> bases;

  [[nodiscard]] std::size_t size() const { return tx_bits.size(); }
};

/// Keeps signal-class, single-click events whose measured basis matches the
/// sent basis. tx_records may be any superset of the event slots, sorted by index.
inline SiftedKey sift(std::span<const PulseRecord> tx_records, std::span<const DetectionEvent> rx_events) {
  SiftedKey key;
  std::size_t cursor = 0;
  for (const auto& e : rx_events) {
    if (cursor >= tx_records.size() || tx_records[cursor].index != e.pulse_index) {
      auto it = std::lower_bound(tx_records.begin(), tx_records.end(), e.pulse_index,
                                 [](const PulseRecord& r, std::uint64_t idx) { return r.index < idx; });
      if (it == tx_records.end() || it->index != e.pulse_index)
        throw DataIntegrityError("key_postprocess", "event references unknown pulse " + std::to_string(e.pulse_index));
      cursor = static_cast<std::size_t>(it - tx_records.begin());
    }
    const PulseRecord& r = tx_records[cursor];
    ++cursor;
    if (r.intensity != IntensityClass::signal || e.double_click) continue;
    if (detector_basis(e.detector_id) != r.basis) continue;
    key.tx_bits.push_back(r.bit);
    key.rx_bits.push_back(detector_bit(e.detector_id));
    key.source_indices.push_back(r.index);
    key.bases.push_back(r.basis);
  }
  return key;
}

/// Per-intensity-class counts for parameter estimation. error_rate() is taken
/// over the basis-matched detections.
struct GainStatistics {
  std::array<std::uint64_t, kClassCount> sent{};
  std::array<std::uint64_t, kClassCount> detected{};
  std::array<std::uint64_t, kClassCount> matched{};
  std::array<std::uint64_t, kClassCount> errors{};

  [[nodiscard]] double gain(IntensityClass c) const {
    const auto i = static_cast<std::size_t>(c);
    return sent[i] ? static_cast<double>(detected[i]) / static_cast<double>(sent[i]) : 0.0;
  }
  [[nodiscard]] double error_rate(IntensityClass c) const {
    const auto i = static_cast<std::size_t>(c);
    return matched[i] ? static_cast<double>(errors[i]) / static_cast<double>(matched[i]) : 0.5;
  }
};

inline GainStatistics tally_gain_statistics(std::span<const SliceTally> slices) {
  GainStatistics g;
  for (const auto& s : slices) {
    for (std::size_t c = 0; c < kClassCount; ++c) {
      g.sent[c] += s.sent[c];
      g.detected[c] += s.detected[c];
      g.matched[c] += s.matched[c];
      g.errors[c] += s.errors[c];
    }
  }
  return g;
}

inline void write_gain_statistics_csv(std::ostream& os, const GainStatistics& g) {
  os << "class,sent,detected,matched,errors,gain,error_rate\n";
  for (auto c : kAllClasses) {
    const auto i = static_cast<std::size_t>(c);
    os << to_string(c) << ',' << g.sent[i] << ',' << g.detected[i] << ',' << g.matched[i] << ',' << g.errors[i]
       << ',' << format_double(g.gain(c)) << ',' << format_double(g.error_rate(c)) << '\n';
  }
}

}  // namespace satqkd
