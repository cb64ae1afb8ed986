#pragma once

// Error correction by repeated block-wise Hamming syndrome exchange.
//
// Each pass shuffles both keys with a shared permutation and cuts them into
// blocks of 2^m - 1 bits. A block's parity is compared first; only blocks
// with differing parity exchange the m-bit syndrome, and the receiver flips
// the bit it points to. Blocks with an even number of errors survive a pass
// and are split up by the next shuffle. Reconciliation ends when a pass sees
// no parity mismatch and a 64-bit universal-hash tag over the whole key agrees.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "satqkd/core.hpp"
#include "satqkd/postprocess/sifting.hpp"

namespace satqkd {

struct ReconciliationOptions {
  int max_passes = 10;
  /// Expected errors per block the block length is sized for.
  double block_error_target = 0.4;
  /// The error estimate falls by at most this factor per pass.
  double estimate_decay_floor = 0.35;
};

struct ReconciliationResult {
  Bits tx_bits;
  Bits rx_bits;
  std::uint64_t leak_bits = 0;
  std::uint64_t parity_bits = 0;
  std::uint64_t syndrome_bits = 0;
  std::uint64_t tag_bits = 0;
  int passes = 0;
};

/// Polynomial hash over 61-bit limbs modulo 2^61 - 1, keyed by the seed.
inline std::uint64_t verification_tag(std::span<const std::uint8_t> bits, std::uint64_t seed) {
  constexpr std::uint64_t kPrime = (1ULL << 61) - 1;
  auto mulmod = [](std::uint64_t a, std::uint64_t b) {
    const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    std::uint64_t r = static_cast<std::uint64_t>(p & kPrime) + static_cast<std::uint64_t>(p >> 61);
    if (r >= kPrime) r -= kPrime;
    return r;
  };
  const std::uint64_t point = mix_seed(seed, 0x7A6) % (kPrime - 2) + 2;
  std::uint64_t h = bits.size() % kPrime;
  std::uint64_t limb = 0;
  int filled = 0;
  auto absorb = [&](std::uint64_t value) {
    h = mulmod(h, point) + value;
    if (h >= kPrime) h -= kPrime;
  };
  for (auto b : bits) {
    limb |= static_cast<std::uint64_t>(b & 1U) << filled;
    if (++filled == 60) {
      absorb(limb);
      limb = 0;
      filled = 0;
    }
  }
  if (filled > 0) absorb(limb);
  return h ^ mix_seed(seed, 0x7A7);
}

namespace detail {

/// XOR of the 1-based positions of set bits, and the block parity.
inline std::pair<std::uint32_t, std::uint8_t> hamming_syndrome(std::span<const std::uint8_t> block) {
  std::uint32_t syndrome = 0;
  std::uint8_t parity = 0;
  for (std::size_t i = 0; i < block.size(); ++i) {
    if (block[i]) {
      syndrome ^= static_cast<std::uint32_t>(i + 1);
      parity ^= 1U;
    }
  }
  return {syndrome, parity};
}

/// Expected residual error rate after one pass over blocks of n bits with
/// per-bit error rate q: single errors are fixed, other odd counts gain one
/// miscorrection, even counts are untouched.
inline double residual_error_rate(std::uint64_t n, double q) {
  if (q <= 0.0) return 0.0;
  const double nd = static_cast<double>(n);
  double pmf = std::pow(1.0 - q, nd);
  double expected = 0.0;
  const std::uint64_t top = std::min<std::uint64_t>(n, 200);
  for (std::uint64_t x = 0; x <= top; ++x) {
    if (x > 0) pmf *= (nd - static_cast<double>(x - 1)) / static_cast<double>(x) * q / (1.0 - q);
    const double left = x == 1 ? 0.0 : (x % 2 ? static_cast<double>(x + 1) : static_cast<double>(x));
    expected += pmf * left;
  }
  return expected / nd;
}

/// Per-bit error rate implied by the fraction of blocks with odd parity.
inline double error_rate_from_odd_blocks(double odd_fraction, std::uint64_t block) {
  const double f = std::min(odd_fraction, 0.499);
  return 0.5 * (1.0 - std::pow(1.0 - 2.0 * f, 1.0 / static_cast<double>(block)));
}

inline int syndrome_length(std::size_t block_length) {
  return std::max(1, static_cast<int>(std::bit_width(block_length)));
}

}  // namespace detail

inline ReconciliationResult error_correct(const Bits& tx, const Bits& rx, double qber_estimate, std::uint64_t seed,
                                          const ReconciliationOptions& options = {}) {
  if (tx.size() != rx.size()) throw DataIntegrityError("key_postprocess", "key halves differ in length");
  if (!(qber_estimate >= 0.0 && qber_estimate < 0.11))
    throw DomainError("key_postprocess", "QBER estimate outside [0, 0.11)");

  const std::size_t n = tx.size();
  ReconciliationResult res;
  if (n == 0) {
    res.passes = 0;
    return res;
  }
  Bits a = tx;
  Bits b = rx;
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0U);
  std::mt19937_64 rng(mix_seed(seed, 0xEC));
  Bits scratch_a(n);
  Bits scratch_b(n);
  std::vector<std::uint32_t> scratch_order(n);
  std::vector<std::uint32_t> perm(n);

  const double floor_rate = 0.5 / static_cast<double>(n);
  double estimate = std::max(qber_estimate, floor_rate);
  for (int pass = 1; pass <= options.max_passes; ++pass) {
    res.passes = pass;
    std::size_t m = 1;
    while ((static_cast<double>((std::size_t{1} << (m + 1)) - 1) * estimate < options.block_error_target) &&
           ((std::size_t{1} << (m + 1)) - 1 <= n) && m < 30)
      ++m;
    const std::size_t block = (std::size_t{1} << m) - 1;

    std::iota(perm.begin(), perm.end(), 0U);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < n; ++i) {
      scratch_a[i] = a[perm[i]];
      scratch_b[i] = b[perm[i]];
      scratch_order[i] = order[perm[i]];
    }
    a.swap(scratch_a);
    b.swap(scratch_b);
    order.swap(scratch_order);

    std::size_t blocks = 0;
    std::size_t odd = 0;
    for (std::size_t start = 0; start < n; start += block) {
      const std::size_t len = std::min(block, n - start);
      ++blocks;
      const auto [syn_a, par_a] = detail::hamming_syndrome(std::span<const std::uint8_t>(a).subspan(start, len));
      const auto [syn_b, par_b] = detail::hamming_syndrome(std::span<const std::uint8_t>(b).subspan(start, len));
      ++res.parity_bits;
      if (par_a == par_b) continue;
      ++odd;
      res.syndrome_bits += static_cast<std::uint64_t>(detail::syndrome_length(len));
      const std::uint32_t pos = syn_a ^ syn_b;
      if (pos >= 1 && pos <= len) b[start + pos - 1] ^= 1U;
    }

    if (odd == 0) {
      res.tag_bits += 64;
      if (verification_tag(a, mix_seed(seed, 0x7A6 + pass)) == verification_tag(b, mix_seed(seed, 0x7A6 + pass))) {
        res.leak_bits = res.parity_bits + res.syndrome_bits + res.tag_bits;
        res.tx_bits.assign(n, 0);
        res.rx_bits.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
          res.tx_bits[order[i]] = a[i];
          res.rx_bits[order[i]] = b[i];
        }
        return res;
      }
    }
    const double before = detail::error_rate_from_odd_blocks(static_cast<double>(odd) / static_cast<double>(blocks), block);
    estimate = std::max({detail::residual_error_rate(block, before), estimate * options.estimate_decay_floor, floor_rate});
  }
  throw ReconciliationError("key_postprocess", "verification failed after " + std::to_string(options.max_passes) +
                                                   " passes");
}

inline ReconciliationResult error_correct(const SiftedKey& key, double qber_estimate, std::uint64_t seed,
                                          const ReconciliationOptions& options = {}) {
  return error_correct(key.tx_bits, key.rx_bits, qber_estimate, seed, options);
}

}  // namespace satqkd
