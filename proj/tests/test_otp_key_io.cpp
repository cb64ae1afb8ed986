#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "satqkd/postprocess/key_io.hpp"
#include "satqkd/postprocess/otp_relay.hpp"

using namespace satqkd;

namespace {

Bits random_bits(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Bits b(n);
  for (auto& x : b) x = rng() & 1U;
  return b;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("satqkd_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(OtpRelay, StationRecoversRemoteKey) {
  const Bits ka = random_bits(1000, 1);
  const Bits kb = random_bits(800, 2);
  KeyBuffer a(ka, "A");
  KeyBuffer b(kb, "B");
  const auto m = otp_relay(a, b);
  ASSERT_EQ(m.announcement.size(), 800U);
  EXPECT_EQ(recover_remote_key(m.announcement, m.key_a), Bits(kb.begin(), kb.end()));
  EXPECT_EQ(m.key_b, kb);
  EXPECT_EQ(a.remaining(), 200U);
  EXPECT_EQ(b.remaining(), 0U);
}

TEST(OtpRelay, AnnouncementAloneRevealsNothingAboutEitherKey) {
  // XOR with a uniform pad: announcement bits are balanced and uncorrelated with B.
  const Bits kb(100000, 1);
  KeyBuffer a(random_bits(100000, 3));
  KeyBuffer b(kb);
  const auto m = otp_relay(a, b);
  std::size_t ones = 0;
  for (auto x : m.announcement) ones += x;
  EXPECT_NEAR(static_cast<double>(ones) / 100000.0, 0.5, 4.0 * 0.5 / std::sqrt(100000.0));
}

TEST(OtpRelay, ReusingConsumedPadIsRefused) {
  KeyBuffer a(random_bits(64, 4), "A");
  KeyBuffer b(random_bits(64, 5), "B");
  otp_relay(a, b);
  EXPECT_THROW(otp_relay(a, b), OneTimePadViolation);
  EXPECT_THROW(a.take(1), OneTimePadViolation);
}

TEST(OtpRelay, TakeAdvancesCursor) {
  KeyBuffer a(random_bits(10, 6));
  const auto first = a.take(4);
  const auto second = a.take(6);
  EXPECT_EQ(first.data() + 4, second.data());
  EXPECT_EQ(a.consumed(), 10U);
  EXPECT_THROW(a.take(1), OneTimePadViolation);
}

TEST(OtpRelay, EmptyKeysAreLengthErrors) {
  KeyBuffer a;
  KeyBuffer b(random_bits(8, 7));
  EXPECT_THROW(otp_relay(a, b), LengthError);
  EXPECT_THROW(recover_remote_key(Bits(3), Bits(4)), LengthError);
}

TEST(KeyFile, RoundTripsBitsAndHeader) {
  const auto dir = scratch_dir("keyfile");
  for (std::size_t n : {0UL, 1UL, 7UL, 8UL, 9UL, 12345UL}) {
    const Bits bits = random_bits(n, n);
    const KeyFileHeader header{n, 6.1e-9, "calibration", 20161219};
    write_key_file(dir / "key", bits, header);
    EXPECT_EQ(std::filesystem::file_size(dir / "key.bin"), (n + 7) / 8);
    const auto [back, h] = read_key_file(dir / "key");
    EXPECT_EQ(back, bits);
    EXPECT_EQ(h, header);
  }
}

TEST(KeyFile, PacksMostSignificantBitFirst) {
  const auto dir = scratch_dir("keypack");
  write_key_file(dir / "k", Bits{1, 0, 1, 1}, KeyFileHeader{4, 1e-9, "x", 1});
  std::ifstream in(dir / "k.bin", std::ios::binary);
  const int byte = in.get();
  EXPECT_EQ(byte, 0xB0);
}

TEST(KeyFile, TruncatedBinaryIsIoError) {
  const auto dir = scratch_dir("keytrunc");
  write_key_file(dir / "k", random_bits(64, 1), KeyFileHeader{64, 1e-9, "x", 1});
  std::filesystem::resize_file(dir / "k.bin", 4);
  EXPECT_THROW(read_key_file(dir / "k"), IoError);
  EXPECT_THROW(read_key_file(dir / "missing"), IoError);
}

TEST(KeyFile, UnwritableLocationIsIoError) {
  EXPECT_THROW(write_key_file("/nonexistent_dir/k", Bits{1}, KeyFileHeader{}), IoError);
}
