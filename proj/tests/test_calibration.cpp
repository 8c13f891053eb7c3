#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "proprio/calibration.hpp"
#include "proprio/errors.hpp"
#include "proprio/sensor_sim.hpp"

using namespace proprio;

TEST(FitCalibration, ExactLinear) {
  std::vector<CalibrationSample> s;
  for (int i = 0; i <= 20; ++i) s.push_back({0.1 * i, 0.2 * i});
  const auto m = fit_calibration(s);
  EXPECT_NEAR(m.a, 0.0, 1e-12);
  EXPECT_NEAR(m.b, 2.0, 1e-12);
  EXPECT_NEAR(m.c, 0.0, 1e-12);
  EXPECT_NEAR(m.fit_rmse, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(m.v_min, 0.0);
  EXPECT_DOUBLE_EQ(m.v_max, 2.0);
}

TEST(FitCalibration, Errors) {
  std::vector<CalibrationSample> two{{0.1, 0.0}, {0.2, 0.1}};
  EXPECT_THROW(fit_calibration(two), FitError);
  std::vector<CalibrationSample> flat(10, {1.0, 0.3});
  EXPECT_THROW(fit_calibration(flat), FitError);
  std::vector<CalibrationSample> bowl;
  for (int i = -10; i <= 10; ++i) bowl.push_back({0.1 * i, 0.01 * i * i});
  EXPECT_THROW(fit_calibration(bowl), BijectivityError);
  std::vector<CalibrationSample> bad{{0.1, 0.0}, {0.2, std::nan("")}, {0.3, 0.2}};
  EXPECT_THROW(fit_calibration(bad), FitError);
}

TEST(FitCalibration, NoisyQuadraticRecoversNoiseLevel) {
  const double sigma = 4.72 * kDeg;
  const auto sensors = default_sensor_characteristics(12, 99);
  double sum = 0.0;
  int count = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (std::size_t k = 0; k < sensors.size(); ++k) {
      auto rng = make_rng(seed, 77, k);
      std::normal_distribution<double> noise(0.0, sigma);
      std::vector<CalibrationSample> s;
      for (int i = 0; i < 600; ++i) {
        const double theta = 50.0 * kDeg * std::sin(0.013 * i);
        const double v = orientation_to_voltage(sensors[k], theta).voltage;
        s.push_back({v, theta + noise(rng)});
      }
      sum += fit_calibration(s).fit_rmse;
      ++count;
    }
  }
  const double mean = sum / count;
  EXPECT_NEAR(mean / sigma, 1.0, 0.15);
}

TEST(VoltageToOrientation, PairAveraging) {
  CalibrationMap m{0.05, 0.6, -1.0, 0.2, 3.1, 0.0};
  const auto single = voltage_to_orientation(m, 1.4, 1.4);
  EXPECT_DOUBLE_EQ(single.theta, m.evaluate(1.4));
  EXPECT_FALSE(single.clamped);
  const auto pair = voltage_to_orientation(m, 1.4 - 0.2, 1.4 + 0.2);
  EXPECT_NEAR(pair.theta, m.evaluate(1.4), 1e-15);
  // Averaging after mapping differs by a * delta^2.
  const double after = 0.5 * (m.evaluate(1.2) + m.evaluate(1.6));
  EXPECT_NEAR(after - pair.theta, m.a * 0.04, 1e-15);
}

TEST(VoltageToOrientation, ClampsAndFlags) {
  CalibrationMap m{0.0, 0.5, -0.8, 0.2, 3.1, 0.0};
  const auto hi = voltage_to_orientation(m, 3.3, 3.3);
  EXPECT_TRUE(hi.clamped);
  EXPECT_DOUBLE_EQ(hi.theta, m.evaluate(3.1));
  const auto lo = voltage_to_orientation(m, 0.0, 0.1);
  EXPECT_TRUE(lo.clamped);
  EXPECT_DOUBLE_EQ(lo.theta, m.evaluate(0.2));
  EXPECT_THROW(voltage_to_orientation(m, std::nan(""), 1.0), InvalidInput);
}

TEST(OrientationToVoltage, RoundTrip) {
  for (const auto& m : default_sensor_characteristics(12, 3)) {
    const auto [lo, hi] = m.orientation_range();
    for (int i = 1; i < 200; ++i) {
      const double theta = lo + (hi - lo) * i / 200.0;
      const auto v = orientation_to_voltage(m, theta);
      EXPECT_FALSE(v.clamped);
      EXPECT_NEAR(m.evaluate(v.voltage), theta, 1e-12);
    }
    const auto out = orientation_to_voltage(m, hi + 0.5);
    EXPECT_TRUE(out.clamped);
  }
}

TEST(OrientationToVoltage, DecreasingMap) {
  CalibrationMap m{0.02, -0.7, 1.1, 0.2, 3.1, 0.0};
  ASSERT_TRUE(m.is_monotonic());
  const auto [lo, hi] = m.orientation_range();
  const double theta = 0.5 * (lo + hi);
  EXPECT_NEAR(m.evaluate(orientation_to_voltage(m, theta).voltage), theta, 1e-12);
  EXPECT_DOUBLE_EQ(orientation_to_voltage(m, hi + 1).voltage, m.v_min);
}

TEST(CalibrationMap, DenseMonotonicity) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise(0.0, 2.0 * kDeg);
  for (const auto& truth : default_sensor_characteristics(6, 21)) {
    std::vector<CalibrationSample> s;
    for (int i = 0; i < 400; ++i) {
      const double theta = 0.8 * std::sin(0.05 * i);
      s.push_back({orientation_to_voltage(truth, theta).voltage, theta + noise(rng)});
    }
    const auto m = fit_calibration(s);
    const int n = 10000;
    const double sign = m.slope(m.v_min) > 0 ? 1.0 : -1.0;
    double prev = m.evaluate(m.v_min);
    for (int i = 1; i < n; ++i) {
      const double v = m.v_min + (m.v_max - m.v_min) * i / (n - 1);
      const double cur = m.evaluate(v);
      ASSERT_GT(sign * (cur - prev), 0.0) << v;
      prev = cur;
    }
  }
}

TEST(Calibration, RoundTripWithinFitError) {
  const auto truth = default_sensor_characteristics(1, 4).front();
  std::mt19937_64 rng(2);
  std::normal_distribution<double> vnoise(0.0, 0.02);
  std::vector<CalibrationSample> s;
  for (int i = 0; i < 2000; ++i) {
    const double theta = 0.8 * std::sin(0.01 * i);
    s.push_back({orientation_to_voltage(truth, theta).voltage + vnoise(rng), theta});
  }
  const auto m = fit_calibration(s);
  double sq = 0.0;
  for (int i = 0; i < 500; ++i) {
    const double theta = -0.7 + 1.4 * i / 499.0;
    const double v = orientation_to_voltage(truth, theta).voltage;
    const double err = voltage_to_orientation(m, v, v).theta - theta;
    sq += err * err;
  }
  const double slope = std::abs(truth.slope(1.65));
  EXPECT_LE(std::sqrt(sq / 500), m.fit_rmse + slope * 0.02);
}
