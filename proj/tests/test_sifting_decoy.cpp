#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "satqkd/postprocess/decoy.hpp"
#include "satqkd/postprocess/sifting.hpp"

using namespace satqkd;

namespace {

DetectionEvent click(std::uint64_t index, Basis basis, std::uint8_t bit, bool double_click = false) {
  DetectionEvent e;
  e.pulse_index = index;
  e.detector_id = detector_id(basis, bit);
  e.double_click = double_click;
  return e;
}

// Photon-number expansion of the channel: n-photon yield and error.
struct TrueChannel {
  double eta;
  double y0;
  double e_pol;

  [[nodiscard]] double yield(int n) const { return 1.0 - (1.0 - y0) * std::pow(1.0 - eta, n); }
  [[nodiscard]] double error_yield(int n) const { return 0.5 * y0 + e_pol * (1.0 - std::pow(1.0 - eta, n)) * (1.0 - y0); }

  [[nodiscard]] double gain(double mu) const {
    double q = 0.0;
    double term = std::exp(-mu);
    for (int n = 0; n < 80; ++n) {
      q += term * yield(n);
      term *= mu / (n + 1);
    }
    return q;
  }
  [[nodiscard]] double error_gain(double mu) const {
    double q = 0.0;
    double term = std::exp(-mu);
    for (int n = 0; n < 80; ++n) {
      q += term * error_yield(n);
      term *= mu / (n + 1);
    }
    return q;
  }
  [[nodiscard]] double e1() const { return error_yield(1) / yield(1); }
};

GainStatistics expected_statistics(const TrueChannel& ch, const SourceConfig& src, double pulses_per_class) {
  GainStatistics g;
  for (auto c : kAllClasses) {
    const auto i = static_cast<std::size_t>(c);
    const double mu = src.mu(c);
    g.sent[i] = static_cast<std::uint64_t>(pulses_per_class);
    g.detected[i] = static_cast<std::uint64_t>(std::llround(pulses_per_class * ch.gain(mu)));
    g.matched[i] = g.detected[i] / 2;
    g.errors[i] = static_cast<std::uint64_t>(std::llround(0.5 * pulses_per_class * ch.error_gain(mu)));
  }
  return g;
}

GainStatistics sampled_statistics(const TrueChannel& ch, const SourceConfig& src, std::uint64_t pulses,
                                  std::mt19937_64& rng) {
  GainStatistics g;
  for (auto c : kAllClasses) {
    const auto i = static_cast<std::size_t>(c);
    const double mu = src.mu(c);
    g.sent[i] = pulses;
    g.detected[i] = std::binomial_distribution<std::uint64_t>(pulses, ch.gain(mu))(rng);
    g.matched[i] = std::binomial_distribution<std::uint64_t>(g.detected[i], 0.5)(rng);
    const double e = ch.error_gain(mu) / ch.gain(mu);
    g.errors[i] = std::binomial_distribution<std::uint64_t>(g.matched[i], e)(rng);
  }
  return g;
}

SourceConfig steady_source() {
  SourceConfig s;
  s.intensity_fluctuation = 0.0;
  return s;
}

}  // namespace

TEST(Sift, KeepsOnlySignalBasisMatchedSingleClicks) {
  const std::vector<PulseRecord> tx{
      {0, Basis::rectilinear, 1, IntensityClass::signal},   // kept
      {1, Basis::diagonal, 0, IntensityClass::signal},      // basis mismatch
      {2, Basis::diagonal, 1, IntensityClass::decoy},       // decoy
      {3, Basis::rectilinear, 0, IntensityClass::signal},   // double click
      {4, Basis::diagonal, 0, IntensityClass::signal},      // kept with an error
      {5, Basis::rectilinear, 0, IntensityClass::vacuum},   // vacuum
  };
  const std::vector<DetectionEvent> rx{click(0, Basis::rectilinear, 1), click(1, Basis::rectilinear, 0),
                                       click(2, Basis::diagonal, 1),    click(3, Basis::rectilinear, 0, true),
                                       click(4, Basis::diagonal, 1),    click(5, Basis::rectilinear, 0)};
  const auto key = sift(tx, rx);
  ASSERT_EQ(key.size(), 2U);
  EXPECT_EQ(key.source_indices, (std::vector<std::uint64_t>{0, 4}));
  EXPECT_EQ(key.tx_bits, (Bits{1, 0}));
  EXPECT_EQ(key.rx_bits, (Bits{1, 1}));
  EXPECT_EQ(key.bases, (std::vector<Basis>{Basis::rectilinear, Basis::diagonal}));
}

TEST(Sift, AllMismatchedGivesEmptyKey) {
  std::vector<PulseRecord> tx;
  std::vector<DetectionEvent> rx;
  for (std::uint64_t i = 0; i < 50; ++i) {
    tx.push_back({i * 3, Basis::rectilinear, 0, IntensityClass::signal});
    rx.push_back(click(i * 3, Basis::diagonal, 0));
  }
  EXPECT_EQ(sift(tx, rx).size(), 0U);
}

TEST(Sift, RecordsMayBeASuperset) {
  std::vector<PulseRecord> tx;
  for (std::uint64_t i = 0; i < 100; ++i) tx.push_back({i, Basis::diagonal, static_cast<std::uint8_t>(i & 1U), IntensityClass::signal});
  const std::vector<DetectionEvent> rx{click(7, Basis::diagonal, 1), click(40, Basis::diagonal, 0),
                                       click(99, Basis::diagonal, 1)};
  EXPECT_EQ(sift(tx, rx).source_indices, (std::vector<std::uint64_t>{7, 40, 99}));
}

TEST(Sift, UnknownPulseIndexIsIntegrityError) {
  const std::vector<PulseRecord> tx{{0, Basis::rectilinear, 0, IntensityClass::signal}};
  const std::vector<DetectionEvent> rx{click(5, Basis::rectilinear, 0)};
  EXPECT_THROW(sift(tx, rx), DataIntegrityError);
}

TEST(GainStatistics, SumsSlicesAndDefaultsErrorToHalf) {
  SliceTally a;
  a.sent = {10, 20, 30};
  a.detected = {4, 2, 0};
  a.matched = {2, 1, 0};
  a.errors = {1, 0, 0};
  SliceTally b = a;
  b.sent[0] = 90;
  const std::vector<SliceTally> slices{a, b};
  const auto g = tally_gain_statistics(slices);
  EXPECT_EQ(g.sent[0], 100U);
  EXPECT_DOUBLE_EQ(g.gain(IntensityClass::signal), 0.08);
  EXPECT_DOUBLE_EQ(g.error_rate(IntensityClass::signal), 0.5);
  EXPECT_DOUBLE_EQ(g.error_rate(IntensityClass::vacuum), 0.5);
  std::ostringstream os;
  write_gain_statistics_csv(os, g);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "class,sent,detected,matched,errors,gain,error_rate");
}

TEST(ZScore, MatchesGaussianTail) {
  EXPECT_NEAR(z_for_epsilon(1e-9), 5.998, 0.001);
  EXPECT_NEAR(z_for_epsilon(0.0227501), 2.0, 1e-4);
  EXPECT_THROW(z_for_epsilon(0.0), DomainError);
}

TEST(DecoyBounds, BracketPhotonNumberExpansion) {
  const TrueChannel ch{0.01, 1e-5, 0.01};
  const auto src = steady_source();
  const auto stats = expected_statistics(ch, src, 1e8);
  const auto b = decoy_bounds(stats, src, 1e-9);
  ASSERT_FALSE(b.abort);
  const double y1 = ch.yield(1);
  EXPECT_LE(b.y1_lower, y1);
  EXPECT_GE(b.y1_lower, 0.9 * y1);
  EXPECT_GE(b.e1_upper, ch.e1());
  EXPECT_LT(b.e1_upper, 0.05);
  EXPECT_LE(b.q1_lower, src.mu_signal * std::exp(-src.mu_signal) * y1);
}

TEST(DecoyBounds, ValidOverRandomizedChannels) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> log_eta(-4.0, -1.0);
  std::uniform_real_distribution<double> log_y0(-6.0, -4.0);
  std::uniform_real_distribution<double> e_pol(0.0, 0.05);
  const auto src = steady_source();
  int valid = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const TrueChannel ch{std::pow(10.0, log_eta(rng)), std::pow(10.0, log_y0(rng)), e_pol(rng)};
    const auto b = decoy_bounds(sampled_statistics(ch, src, 100'000'000, rng), src, 1e-9);
    if (b.abort || (b.y1_lower <= ch.yield(1) && b.e1_upper >= ch.e1())) ++valid;
  }
  EXPECT_GE(valid, 999);
}

TEST(DecoyBounds, IntensityFluctuationOnlyLoosens) {
  const TrueChannel ch{0.01, 1e-5, 0.01};
  auto src = steady_source();
  const auto stats = expected_statistics(ch, src, 1e8);
  const auto tight = decoy_bounds(stats, src, 1e-9);
  src.intensity_fluctuation = 0.05;
  const auto loose = decoy_bounds(stats, src, 1e-9);
  EXPECT_LE(loose.y1_lower, tight.y1_lower);
  EXPECT_GE(loose.e1_upper, tight.e1_upper);
}

TEST(DecoyBounds, VacuumEstimateIsObservedYield) {
  const auto stats = expected_statistics(TrueChannel{0.01, 3e-5, 0.01}, steady_source(), 1e8);
  const auto b = decoy_bounds(stats, steady_source(), 1e-9);
  EXPECT_DOUBLE_EQ(b.y0_estimate, static_cast<double>(stats.detected[2]) / 1e8);
}

TEST(DecoyBounds, EmptyClassIsDomainError) {
  GainStatistics g;
  g.sent = {10, 0, 10};
  EXPECT_THROW(decoy_bounds(g, SourceConfig{}, 1e-9), DomainError);
}

TEST(DecoyBounds, NoSignalAboveNoiseAborts) {
  // Pure background: every class sees the same yield.
  GainStatistics g;
  g.sent = {100000, 100000, 100000};
  g.detected = {100, 100, 100};
  g.matched = {50, 50, 50};
  g.errors = {25, 25, 25};
  const auto b = decoy_bounds(g, SourceConfig{}, 1e-9);
  EXPECT_TRUE(b.abort);
  EXPECT_EQ(secure_key_length(50, b, g, 0.0, 1e-9), 0U);
}

TEST(KeyLength, AllErrorsGiveNoKey) {
  const TrueChannel ch{0.01, 1e-5, 0.5};
  const auto src = steady_source();
  const auto stats = expected_statistics(ch, src, 1e8);
  const auto b = decoy_bounds(stats, src, 1e-9);
  EXPECT_EQ(secure_key_length(1'000'000, b, stats, 0.0, 1e-9), 0U);
}

TEST(KeyLength, HandComputedValue) {
  DecoyBounds b;
  b.q1_lower = 0.006;
  b.e1_upper = 0.02;
  GainStatistics g;
  g.sent = {100, 100, 100};
  g.detected = {1, 1, 1};  // signal gain 0.01
  const std::uint64_t n = 1'650'000;
  const double leak = 1.3 * binary_entropy(0.01) * static_cast<double>(n);
  EXPECT_NEAR(static_cast<double>(secure_key_length(n, b, g, leak, 1e-9)), 676612.0, 1.0);
}

TEST(KeyLength, MonotoneInInputs) {
  const TrueChannel ch{0.01, 1e-5, 0.01};
  const auto src = steady_source();
  const auto stats = expected_statistics(ch, src, 1e8);
  const auto b = decoy_bounds(stats, src, 1e-9);
  std::uint64_t prev = 0;
  for (std::uint64_t n = 100'000; n <= 1'000'000; n += 100'000) {
    const auto l = secure_key_length(n, b, stats, 0.0, 1e-9);
    EXPECT_GT(l, prev);
    prev = l;
  }
  EXPECT_GT(secure_key_length(500'000, b, stats, 1000.0, 1e-9), secure_key_length(500'000, b, stats, 5000.0, 1e-9));
  EXPECT_GE(secure_key_length(500'000, b, stats, 0.0, 1e-6), secure_key_length(500'000, b, stats, 0.0, 1e-12));
}

TEST(BinaryEntropy, ReferenceValues) {
  EXPECT_EQ(binary_entropy(0.0), 0.0);
  EXPECT_EQ(binary_entropy(1.0), 0.0);
  EXPECT_DOUBLE_EQ(binary_entropy(0.5), 1.0);
  EXPECT_NEAR(binary_entropy(0.11), 0.49992, 1e-5);
  for (double p = 0.01; p < 0.5; p += 0.01) EXPECT_NEAR(binary_entropy(p), binary_entropy(1.0 - p), 1e-12);
}

TEST(KeyLength, MonotoneInBounds) {
  GainStatistics g;
  g.sent = {100, 100, 100};
  g.detected = {1, 1, 1};
  DecoyBounds b;
  b.q1_lower = 0.005;
  std::uint64_t prev = ~0ULL;
  for (double e1 = 0.0; e1 < 0.2; e1 += 0.005) {
    b.e1_upper = e1;
    const auto l = secure_key_length(1'000'000, b, g, 50'000.0, 1e-9);
    EXPECT_LE(l, prev);
    prev = l;
  }
  b.e1_upper = 0.02;
  prev = 0;
  for (double q1 = 0.001; q1 <= 0.01; q1 += 0.001) {
    b.q1_lower = q1;
    const auto l = secure_key_length(1'000'000, b, g, 50'000.0, 1e-9);
    EXPECT_GE(l, prev);
    prev = l;
  }
}
