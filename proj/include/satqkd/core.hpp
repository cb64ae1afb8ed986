#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace satqkd {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kDegToRad = kPi / 180.0;
inline constexpr double kRadToDeg = 180.0 / kPi;

/// Base class for every error raised by the library. The module tag names the
/// pipeline stage that failed so scenario reports can attribute the failure.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), module_(std::move(module)), message_(what) {}

  [[nodiscard]] const std::string& module() const noexcept { return module_; }
  /// The description without the module prefix.
  [[nodiscard]] const std::string& message() const noexcept { return message_; }

 private:
  std::string module_;
  std::string message_;
};

/// Argument outside the physical operating envelope of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent or invalid configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Protocol data referencing something that does not exist.
class DataIntegrityError : public Error {
 public:
  using Error::Error;
};

class ReconciliationError : public Error {
 public:
  using Error::Error;
};

class LengthError : public Error {
 public:
  using Error::Error;
};

class OneTimePadViolation : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

inline double db_to_linear(double loss_db) { return std::pow(10.0, -loss_db / 10.0); }
inline double linear_to_db(double fraction) { return -10.0 * std::log10(fraction); }

/// Binary Shannon entropy with the convention H(0) = H(1) = 0.
inline double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

/// SplitMix64 finalizer; used to derive independent stream seeds from a
/// scenario seed and a stream label.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw Error("core", "double formatting failed");
  return std::string(buf, end);
}

/// Fixed-precision formatting for report columns.
inline std::string format_fixed(double value, int precision) {
  char buf[64];
  auto [end, ec] =
      std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed, precision);
  if (ec != std::errc{}) throw Error("core", "double formatting failed");
  return std::string(buf, end);
}

inline double parse_double(std::string_view text, std::string_view key) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ConfigError("config", "key '" + std::string(key) + "': not a number: '" +
                                    std::string(text) + "'");
  return value;
}

inline std::uint64_t parse_u64(std::string_view text, std::string_view key) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ConfigError("config", "key '" + std::string(key) +
                                    "': not an unsigned integer: '" + std::string(text) + "'");
  return value;
}

}  // namespace satqkd
