#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "satqkd/core.hpp"
#include "satqkd/postprocess/decoy.hpp"
#include "satqkd/postprocess/privacy_amplification.hpp"
#include "satqkd/postprocess/reconciliation.hpp"
#include "satqkd/postprocess/sifting.hpp"
#include "satqkd/quantum_channel.hpp"

namespace satqkd {

struct PostprocessOptions {
  double epsilon_bound = 1e-9;  // per statistical estimate
  double epsilon_pa = 1e-9;
  ReconciliationOptions reconciliation;
  bool operator==(const PostprocessOptions& o) const {
    return epsilon_bound == o.epsilon_bound && epsilon_pa == o.epsilon_pa &&
           reconciliation.max_passes == o.reconciliation.max_passes &&
           reconciliation.block_error_target == o.reconciliation.block_error_target &&
           reconciliation.estimate_decay_floor == o.reconciliation.estimate_decay_floor;
  }
};

struct SecureKeyResult {
  std::uint64_t n_sifted = 0;
  std::uint64_t sifted_errors = 0;
  double qber = 0.0;
  std::uint64_t leak_ec = 0;
  std::uint64_t verification_tag_bits = 0;
  int reconciliation_passes = 0;
  std::uint64_t final_length = 0;
  Bits final_key_tx;
  Bits final_key_rx;
  double epsilon_total = 0.0;
  GainStatistics stats;
  DecoyBounds bounds;
  std::string abort_reason;
};

/// Number of shifted rates entering the decoy bounds, each failing with
/// probability epsilon_bound.
inline constexpr int kStatisticalEstimates = 6;

/// Parameter estimation, error correction and privacy amplification of one
/// pass, starting from its sifted key and class tallies.
inline SecureKeyResult postprocess_key(const SiftedKey& key, const GainStatistics& stats, const SourceConfig& source,
                                       std::uint64_t seed, const PostprocessOptions& options = {}) {
  SecureKeyResult r;
  r.n_sifted = key.size();
  for (std::size_t i = 0; i < key.size(); ++i) r.sifted_errors += key.tx_bits[i] != key.rx_bits[i];
  r.qber = r.n_sifted ? static_cast<double>(r.sifted_errors) / static_cast<double>(r.n_sifted) : 0.0;
  r.stats = stats;

  r.epsilon_total = kStatisticalEstimates * options.epsilon_bound + options.epsilon_pa;
  if (r.n_sifted == 0) {
    r.abort_reason = "no sifted key";
    return r;
  }
  r.bounds = decoy_bounds(r.stats, source, options.epsilon_bound);
  if (r.bounds.abort) {
    r.abort_reason = r.bounds.abort_reason;
    return r;
  }
  if (r.qber >= 0.11) {
    r.abort_reason = "QBER above reconciliation limit";
    return r;
  }

  const auto rec = error_correct(key, r.qber, mix_seed(seed, 0xEC0), options.reconciliation);
  r.leak_ec = rec.leak_bits;
  r.verification_tag_bits = rec.tag_bits;
  r.reconciliation_passes = rec.passes;
  // Each tag comparison collides with probability at most n / 2^61.
  r.epsilon_total += static_cast<double>(rec.tag_bits / 64) * static_cast<double>(r.n_sifted) * std::ldexp(1.0, -61);

  r.final_length = secure_key_length(r.n_sifted, r.bounds, r.stats, static_cast<double>(r.leak_ec), options.epsilon_pa);
  if (r.final_length == 0) {
    r.abort_reason = "no extractable secrecy";
    return r;
  }
  const std::uint64_t pa_seed = mix_seed(seed, 0x9A0);
  r.final_key_tx = privacy_amplify(rec.tx_bits, r.final_length, pa_seed);
  r.final_key_rx = privacy_amplify(rec.rx_bits, r.final_length, pa_seed);
  return r;
}

inline SecureKeyResult postprocess_pass(const ChannelOutput& channel, const SourceConfig& source, std::uint64_t seed,
                                        const PostprocessOptions& options = {}) {
  return postprocess_key(sift(channel.tx_records, channel.events), tally_gain_statistics(channel.slices), source,
                         seed, options);
}

}  // namespace satqkd
