#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "satqkd/apt_tracking.hpp"

using namespace satqkd;

TEST(Tracking, ZeroDisturbanceGivesZeroResidual) {
  DisturbanceModel quiet;
  quiet.bias_drift_amplitude_rad = 0.0;
  quiet.white_jitter_rms_rad = 0.0;
  const auto trace = simulate_two_stage_tracking(5.0, default_coarse_stage(), default_fine_stage(), quiet);
  ASSERT_FALSE(trace.samples.empty());
  for (const auto& s : trace.samples) {
    EXPECT_EQ(s.err_x_rad, 0.0);
    EXPECT_EQ(s.err_y_rad, 0.0);
  }
  EXPECT_FALSE(trace.loss_of_lock);
}

TEST(Tracking, CalibratedLoopResidualPerAxis) {
  const auto trace =
      simulate_two_stage_tracking(300.0, default_coarse_stage(), default_fine_stage(), DisturbanceModel{});
  const auto [x, y] = trace.rms();
  EXPECT_NEAR(x, 1.2e-6, 0.3e-6);
  EXPECT_NEAR(y, 1.2e-6, 0.3e-6);
  EXPECT_FALSE(trace.loss_of_lock);
  EXPECT_FALSE(trace.coarse_saturated);
}

TEST(Tracking, FineStageDisabledLeavesLargeResidual) {
  auto fine = default_fine_stage();
  fine.loop_gain = 0.0;
  const auto trace = simulate_two_stage_tracking(60.0, default_coarse_stage(), fine, DisturbanceModel{});
  const auto [x, y] = trace.rms();
  EXPECT_GT(x, 10e-6);
  EXPECT_GT(y, 10e-6);
}

TEST(Tracking, SampleSpacingFollowsFineFrameRate) {
  const auto trace =
      simulate_two_stage_tracking(1.0, default_coarse_stage(), default_fine_stage(), DisturbanceModel{});
  ASSERT_GE(trace.samples.size(), 3U);
  EXPECT_EQ(trace.samples.size(), 2000U);
  for (std::size_t i = 1; i < trace.samples.size(); ++i)
    EXPECT_NEAR(trace.samples[i].t_s - trace.samples[i - 1].t_s, 1.0 / 2000.0, 1e-12);
}

TEST(Tracking, ReproducibleUnderFixedSeed) {
  DisturbanceModel d;
  d.seed = 42;
  const auto a = simulate_two_stage_tracking(3.0, default_coarse_stage(), default_fine_stage(), d);
  const auto b = simulate_two_stage_tracking(3.0, default_coarse_stage(), default_fine_stage(), d);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].err_x_rad, b.samples[i].err_x_rad);
    EXPECT_EQ(a.samples[i].err_y_rad, b.samples[i].err_y_rad);
  }
  d.seed = 43;
  const auto c = simulate_two_stage_tracking(3.0, default_coarse_stage(), default_fine_stage(), d);
  EXPECT_NE(a.samples.back().err_x_rad, c.samples.back().err_x_rad);
}

TEST(Tracking, PersistentLargeErrorReportsLossOfLock) {
  DisturbanceModel violent;
  violent.white_jitter_rms_rad = 5e-3;  // far beyond the fine field of view
  violent.jitter_correlation_time_s = 2.0;
  auto coarse = default_coarse_stage();
  coarse.loop_gain = 0.0;
  const auto trace = simulate_two_stage_tracking(10.0, coarse, default_fine_stage(), violent);
  EXPECT_TRUE(trace.loss_of_lock);
  ASSERT_TRUE(trace.loss_of_lock_time_s.has_value());
  // Reported at the onset of the excursion, which lasted more than 1 s.
  EXPECT_GE(*trace.loss_of_lock_time_s, 0.0);
  EXPECT_LT(*trace.loss_of_lock_time_s, 9.0);
}

TEST(Tracking, RejectsInvalidConfiguration) {
  auto fine = default_fine_stage();
  fine.field_of_view_rad = default_coarse_stage().field_of_view_rad * 2.0;
  EXPECT_THROW(simulate_two_stage_tracking(1.0, default_coarse_stage(), fine, DisturbanceModel{}), ConfigError);
  EXPECT_THROW(simulate_two_stage_tracking(0.0, default_coarse_stage(), default_fine_stage(), DisturbanceModel{}),
               ConfigError);
}

TEST(PointingFactor, ClosedFormValues) {
  EXPECT_EQ(pointing_transmission_factor(0.0, 5e-6), 1.0);
  const double f = pointing_transmission_factor(1.2e-6, 5e-6);
  EXPECT_NEAR(f, 25.0 / 30.76, 1e-12);
  EXPECT_NEAR(-10.0 * std::log10(f), 0.90, 0.01);
  // Half power at sigma = theta0 / 2.
  EXPECT_NEAR(pointing_transmission_factor(2.5e-6, 5e-6), 0.50, 1e-12);
  EXPECT_NEAR(pointing_transmission_factor(2.9e-6, 5e-6), 25.0 / (25.0 + 4.0 * 8.41), 1e-12);
}

TEST(PointingFactor, MonotoneAndScaleInvariant) {
  double prev = 1.0;
  for (double s = 0.1e-6; s < 10e-6; s += 0.1e-6) {
    const double f = pointing_transmission_factor(s, 5e-6);
    EXPECT_LT(f, prev);
    EXPECT_LE(f, 1.0);
    prev = f;
    EXPECT_NEAR(pointing_transmission_factor(2.0 * s, 10e-6), f, 1e-12);
    EXPECT_GT(pointing_transmission_factor(s, 6e-6), f);
  }
}

TEST(PointingFactor, MatchesMonteCarloOverRayleighErrors) {
  const double sigma = 1.7e-6;
  const double theta0 = 5e-6;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, sigma);
  double sum = 0.0;
  const int samples = 1'000'000;
  for (int i = 0; i < samples; ++i) {
    const double x = n(rng);
    const double y = n(rng);
    sum += std::exp(-2.0 * (x * x + y * y) / (theta0 * theta0));
  }
  const double mc = sum / samples;
  EXPECT_NEAR(mc / pointing_transmission_factor(sigma, theta0), 1.0, 0.01);
}

TEST(Tracking, CsvHeaderAndSummaryLine) {
  const auto trace =
      simulate_two_stage_tracking(0.01, default_coarse_stage(), default_fine_stage(), DisturbanceModel{});
  std::ostringstream os;
  write_tracking_csv(os, trace);
  const std::string text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "t_s,err_x_urad,err_y_urad");
  EXPECT_NE(text.find("# rms_x_urad="), std::string::npos);
}
