#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "satqkd/orbit_pass.hpp"

using namespace satqkd;

namespace {

// Independent oracle: bisection on the law of cosines in the Earth-centred
// triangle (station, satellite, Earth centre).
double range_by_bisection(double el_deg, double h = 500.0, double R = 6371.0) {
  const double r = R + h;
  const double zenith = (90.0 + el_deg) * kDegToRad;  // angle at the station between Earth centre and satellite
  double lo = 0.0;
  double hi = 5000.0;
  for (int i = 0; i < 200; ++i) {
    const double d = 0.5 * (lo + hi);
    const double r2 = R * R + d * d - 2.0 * R * d * std::cos(zenith);
    (r2 < r * r ? lo : hi) = d;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(SlantRange, ZenithEqualsAltitudeExactly) {
  OrbitConfig orbit;
  EXPECT_EQ(slant_range(90.0, orbit), 500.0);
  orbit.altitude_km = 523.25;
  EXPECT_EQ(slant_range(90.0, orbit), 523.25);
}

TEST(SlantRange, MatchesIndependentGeometry) {
  const OrbitConfig orbit;
  for (double el : {0.0, 5.0, 10.0, 19.9, 30.0, 49.0, 70.0, 89.9})
    EXPECT_NEAR(slant_range(el, orbit), range_by_bisection(el), 1e-6) << "el=" << el;
}

TEST(SlantRange, ClosestAndFarthestReferenceRanges) {
  const OrbitConfig orbit;
  EXPECT_NEAR(slant_range(49.0, orbit), 645.0, 5.0);
  EXPECT_NEAR(slant_range(19.9, orbit), 1200.0, 10.0);
}

TEST(SlantRange, StrictlyDecreasingInElevation) {
  const OrbitConfig orbit;
  double prev = slant_range(0.0, orbit);
  for (double el = 0.25; el <= 90.0; el += 0.25) {
    const double d = slant_range(el, orbit);
    EXPECT_LT(d, prev) << "el=" << el;
    prev = d;
  }
}

TEST(SlantRange, RejectsElevationOutsideRange) {
  const OrbitConfig orbit;
  EXPECT_THROW(slant_range(-0.1, orbit), DomainError);
  EXPECT_THROW(slant_range(90.1, orbit), DomainError);
}

TEST(SlantRange, ElevationRoundTrip) {
  const OrbitConfig orbit;
  for (double d = 500.0; d < 2500.0; d += 37.0) {
    const double back = slant_range(elevation_of_range(d, orbit), orbit);
    EXPECT_NEAR(back / d, 1.0, 1e-6) << "d=" << d;
  }
}

TEST(GeneratePass, OverheadPassRangeAndPeakRate) {
  const auto pass = generate_pass(90.0, 15.0, 15.0, 0.1, OrbitConfig{});
  double min_range = 1e9;
  double peak_rate = 0.0;
  for (const auto& p : pass) {
    min_range = std::min(min_range, p.slant_range_km);
    peak_rate = std::max(peak_rate, p.angular_rate_degps);
  }
  EXPECT_NEAR(min_range, 500.0, 0.5);
  // v/d small-angle oracle: 7.6/500 rad/s.
  EXPECT_NEAR(peak_rate, 7.6 / 500.0 * kRadToDeg, 0.02);
}

TEST(GeneratePass, EndpointsSitOnRequestedElevations) {
  const auto pass = generate_pass(49.0, 15.0, 10.0, 1.0, OrbitConfig{});
  ASSERT_GE(pass.size(), 3U);
  EXPECT_EQ(pass.front().elevation_deg, 15.0);
  EXPECT_EQ(pass.back().elevation_deg, 10.0);
  EXPECT_EQ(pass.front().t_s, 0.0);
}

TEST(GeneratePass, RisesThenFallsWithRangeMinimumAtApex) {
  const auto pass = generate_pass(49.0, 15.0, 10.0, 1.0, OrbitConfig{});
  std::size_t apex = 0;
  for (std::size_t i = 1; i < pass.size(); ++i)
    if (pass[i].elevation_deg > pass[apex].elevation_deg) apex = i;
  for (std::size_t i = 1; i <= apex; ++i) EXPECT_GE(pass[i].elevation_deg, pass[i - 1].elevation_deg);
  for (std::size_t i = apex + 1; i < pass.size(); ++i) EXPECT_LE(pass[i].elevation_deg, pass[i - 1].elevation_deg);
  for (const auto& p : pass) EXPECT_GE(p.slant_range_km, pass[apex].slant_range_km - 1e-9);
  EXPECT_NEAR(pass[apex].elevation_deg, 49.0, 0.05);
  // Angular rate peaks near closest approach.
  std::size_t fastest = 0;
  for (std::size_t i = 1; i < pass.size(); ++i)
    if (pass[i].angular_rate_degps > pass[fastest].angular_rate_degps) fastest = i;
  EXPECT_LE(std::abs(static_cast<long>(fastest) - static_cast<long>(apex)), 2);
}

TEST(GeneratePass, SymmetricAboutClosestApproach) {
  // A pass whose span is a whole number of steps has mirrored samples.
  const OrbitConfig orbit;
  const double probe_dt = 1.0;
  const auto probe = generate_pass(60.0, 20.0, 20.0, probe_dt, orbit);
  const double span = probe.back().t_s;
  const auto pass = generate_pass(60.0, 20.0, 20.0, span / 200.0, orbit);
  ASSERT_EQ(pass.size(), 201U);
  for (std::size_t i = 0; i < pass.size(); ++i) {
    const auto& a = pass[i];
    const auto& b = pass[pass.size() - 1 - i];
    EXPECT_NEAR(a.slant_range_km, b.slant_range_km, 1e-6);
    EXPECT_NEAR(a.elevation_deg, b.elevation_deg, 1e-6);
    EXPECT_NEAR(a.angular_rate_degps, b.angular_rate_degps, 1e-9);
  }
}

TEST(GeneratePass, InvariantsHoldEverywhere) {
  const OrbitConfig orbit;
  for (double max_el : {25.0, 49.0, 85.7}) {
    for (const auto& p : generate_pass(max_el, 15.0, 10.0, 0.5, orbit)) {
      EXPECT_GE(p.elevation_deg, 0.0);
      EXPECT_LE(p.elevation_deg, 90.0);
      EXPECT_GE(p.slant_range_km, orbit.altitude_km);
      EXPECT_GE(p.angular_rate_degps, 0.0);
      EXPECT_GE(p.azimuth_deg, 0.0);
      EXPECT_LT(p.azimuth_deg, 360.0);
    }
  }
}

TEST(GeneratePass, DegenerateSingleApexPass) {
  const auto pass = generate_pass(30.0, 30.0, 30.0, 1.0, OrbitConfig{});
  ASSERT_EQ(pass.size(), 1U);
  EXPECT_NEAR(pass[0].slant_range_km, slant_range(30.0, OrbitConfig{}), 1e-9);
}

TEST(GeneratePass, CalibratedWindowDurationNearReference) {
  // The 49 degree pass between the 19.8 degree crossings spans the 645 to
  // 1200 km range interval of the reference pass.
  const auto pass = generate_pass(49.0, 19.8, 19.8, 1.0, OrbitConfig{});
  const double duration = pass.back().t_s;
  EXPECT_NEAR(duration, 273.0, 0.25 * 273.0);
  EXPECT_NEAR(pass.front().slant_range_km, 1200.0, 10.0);
}

TEST(GeneratePass, ConfigurationErrors) {
  const OrbitConfig orbit;
  EXPECT_THROW(generate_pass(10.0, 15.0, 10.0, 1.0, orbit), ConfigError);
  EXPECT_THROW(generate_pass(49.0, 10.0, 15.0, 1.0, orbit), ConfigError);
  EXPECT_THROW(generate_pass(49.0, 15.0, 10.0, 0.0, orbit), ConfigError);
  OrbitConfig bad;
  bad.altitude_km = -1.0;
  EXPECT_THROW(generate_pass(49.0, 15.0, 10.0, 1.0, bad), ConfigError);
}

TEST(GeneratePass, CsvHasDocumentedColumns) {
  std::ostringstream os;
  write_trajectory_csv(os, generate_pass(49.0, 15.0, 10.0, 10.0, OrbitConfig{}));
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "t_s,elevation_deg,azimuth_deg,range_km,angrate_degps");
}
