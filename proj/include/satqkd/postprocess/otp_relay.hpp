#pragma once

// Trusted-relay key combination. The satellite holds one key shared with each
// station; it announces their XOR, and station A recovers B's key from the
// announcement and its own key.

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>

#include "satqkd/core.hpp"
#include "satqkd/postprocess/sifting.hpp"

namespace satqkd {

/// Key material held by the relay. Bits before the cursor have been used as
/// pad and may never be used again.
class KeyBuffer {
 public:
  KeyBuffer() = default;
  explicit KeyBuffer(Bits bits, std::string label = {}) : bits_(std::move(bits)), label_(std::move(label)) {}

  [[nodiscard]] std::size_t size() const { return bits_.size(); }
  [[nodiscard]] std::size_t remaining() const { return bits_.size() - consumed_; }
  [[nodiscard]] std::size_t consumed() const { return consumed_; }
  [[nodiscard]] const std::string& label() const { return label_; }
  [[nodiscard]] std::span<const std::uint8_t> all_bits() const { return bits_; }

  /// Hands out the next `count` unused bits and marks them consumed.
  std::span<const std::uint8_t> take(std::size_t count) {
    if (count > remaining())
      throw OneTimePadViolation("key_postprocess", "key '" + label_ + "' has only " +
                                                       std::to_string(remaining()) + " unused bits");
    auto out = std::span<const std::uint8_t>(bits_).subspan(consumed_, count);
    consumed_ += count;
    return out;
  }

 private:
  Bits bits_;
  std::size_t consumed_ = 0;
  std::string label_;
};

struct RelayMaterial {
  Bits announcement;  // public: key_a XOR key_b
  Bits key_a;         // pad used at station A
  Bits key_b;         // key established at station B, now shared with A
};

inline RelayMaterial otp_relay(KeyBuffer& station_a, KeyBuffer& station_b) {
  if (station_a.size() == 0 || station_b.size() == 0)
    throw LengthError("key_postprocess", "relay needs two nonempty keys");
  if (station_a.remaining() == 0 || station_b.remaining() == 0)
    throw OneTimePadViolation("key_postprocess", "relay key material already consumed");
  const std::size_t len = std::min(station_a.remaining(), station_b.remaining());
  const auto a = station_a.take(len);
  const auto b = station_b.take(len);
  RelayMaterial m;
  m.key_a.assign(a.begin(), a.end());
  m.key_b.assign(b.begin(), b.end());
  m.announcement.resize(len);
  for (std::size_t i = 0; i < len; ++i) m.announcement[i] = static_cast<std::uint8_t>(a[i] ^ b[i]);
  return m;
}

/// Station A's side: announcement XOR own key.
inline Bits recover_remote_key(std::span<const std::uint8_t> announcement, std::span<const std::uint8_t> own_key) {
  if (announcement.size() != own_key.size()) throw LengthError("key_postprocess", "announcement length mismatch");
  Bits out(announcement.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::uint8_t>(announcement[i] ^ own_key[i]);
  return out;
}

}  // namespace satqkd
