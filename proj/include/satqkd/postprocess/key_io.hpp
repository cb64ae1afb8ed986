#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>

#include "satqkd/core.hpp"
#include "satqkd/postprocess/sifting.hpp"

namespace satqkd {

struct KeyFileHeader {
  std::uint64_t length_bits = 0;
  double epsilon = 0.0;
  std::string scenario_id;
  std::uint64_t seed = 0;
  bool operator==(const KeyFileHeader&) const = default;
};

/// Writes `<base>.bin` (bits packed MSB first, zero padded) and `<base>.hdr`.
inline void write_key_file(const std::filesystem::path& base, std::span<const std::uint8_t> bits,
                           const KeyFileHeader& header) {
  std::filesystem::path bin = base;
  bin += ".bin";
  std::filesystem::path hdr = base;
  hdr += ".hdr";
  std::ofstream out(bin, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("key_postprocess", "cannot write " + bin.string());
  std::string packed((bits.size() + 7) / 8, '\0');
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i] & 1U) packed[i / 8] = static_cast<char>(packed[i / 8] | (0x80 >> (i % 8)));
  out.write(packed.data(), static_cast<std::streamsize>(packed.size()));
  if (!out) throw IoError("key_postprocess", "short write to " + bin.string());

  std::ofstream h(hdr, std::ios::trunc);
  if (!h) throw IoError("key_postprocess", "cannot write " + hdr.string());
  h << "length_bits=" << bits.size() << '\n'
    << "epsilon=" << format_double(header.epsilon) << '\n'
    << "scenario_id=" << header.scenario_id << '\n'
    << "seed=" << header.seed << '\n';
  if (!h) throw IoError("key_postprocess", "short write to " + hdr.string());
}

inline std::pair<Bits, KeyFileHeader> read_key_file(const std::filesystem::path& base) {
  std::filesystem::path bin = base;
  bin += ".bin";
  std::filesystem::path hdr = base;
  hdr += ".hdr";
  std::ifstream h(hdr);
  if (!h) throw IoError("key_postprocess", "cannot read " + hdr.string());
  KeyFileHeader header;
  std::string line;
  while (std::getline(h, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "length_bits") header.length_bits = parse_u64(value, key);
    else if (key == "epsilon") header.epsilon = parse_double(value, key);
    else if (key == "scenario_id") header.scenario_id = value;
    else if (key == "seed") header.seed = parse_u64(value, key);
  }
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw IoError("key_postprocess", "cannot read " + bin.string());
  std::string packed((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (packed.size() != (header.length_bits + 7) / 8) throw IoError("key_postprocess", "key file length mismatch");
  Bits bits(header.length_bits);
  for (std::size_t i = 0; i < bits.size(); ++i)
    bits[i] = static_cast<std::uint8_t>((static_cast<unsigned char>(packed[i / 8]) >> (7 - i % 8)) & 1U);
  return {std::move(bits), header};
}

}  // namespace satqkd
