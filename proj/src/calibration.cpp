#include "proprio/calibration.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "proprio/errors.hpp"

namespace proprio {

bool CalibrationMap::is_monotonic() const noexcept {
  const double lo = slope(v_min);
  const double hi = slope(v_max);
  return v_max > v_min && ((lo > 0.0 && hi > 0.0) || (lo < 0.0 && hi < 0.0));
}

std::pair<double, double> CalibrationMap::orientation_range() const noexcept {
  const double lo = evaluate(v_min);
  const double hi = evaluate(v_max);
  return {std::min(lo, hi), std::max(lo, hi)};
}

CalibrationMap fit_calibration(std::span<const CalibrationSample> samples) {
  if (samples.size() < 3)
    throw FitError(fmt::format("calibration needs at least 3 samples, got {}", samples.size()));

  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd target(n);
  double v_lo = samples.front().voltage;
  double v_hi = samples.front().voltage;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    if (!std::isfinite(s.voltage) || !std::isfinite(s.orientation))
      throw FitError("calibration sample is not finite");
    design.row(i) << s.voltage * s.voltage, s.voltage, 1.0;
    target(i) = s.orientation;
    v_lo = std::min(v_lo, s.voltage);
    v_hi = std::max(v_hi, s.voltage);
  }

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 3)
    throw FitError(fmt::format("calibration design is rank deficient (rank {}); voltages span [{}, {}]",
                               qr.rank(), v_lo, v_hi));
  const Eigen::Vector3d coeffs = qr.solve(target);

  CalibrationMap map;
  map.a = coeffs(0);
  map.b = coeffs(1);
  map.c = coeffs(2);
  map.v_min = v_lo;
  map.v_max = v_hi;
  map.fit_rmse = std::sqrt((design * coeffs - target).squaredNorm() / static_cast<double>(n));
  if (!map.is_monotonic())
    throw BijectivityError(fmt::format(
        "fitted calibration is not monotonic on [{:.4f}, {:.4f}] V (slopes {:.4g}, {:.4g})", v_lo,
        v_hi, map.slope(v_lo), map.slope(v_hi)));
  return map;
}

OrientationReading voltage_to_orientation(const CalibrationMap& map, double v_first,
                                          double v_second) {
  if (!std::isfinite(v_first) || !std::isfinite(v_second))
    throw InvalidInput("bend voltage is not finite");
  const double mean = 0.5 * (v_first + v_second);
  const double v = std::clamp(mean, map.v_min, map.v_max);
  return {map.evaluate(v), v != mean};
}

VoltageReading orientation_to_voltage(const CalibrationMap& map, double theta) {
  const auto [lo, hi] = map.orientation_range();
  const double target = std::clamp(theta, lo, hi);
  const bool clamped = target != theta;
  const bool increasing = map.slope(map.v_min) > 0.0;
  if (target == lo) return {increasing ? map.v_min : map.v_max, clamped};
  if (target == hi) return {increasing ? map.v_max : map.v_min, clamped};

  // Root of a v^2 + b v - (target - c) = 0 nearest the linear solution, in the
  // cancellation-free form 2d / (b + sign(b) sqrt(b^2 + 4 a d)).
  const double d = target - map.c;
  const double disc = std::max(0.0, map.b * map.b + 4.0 * map.a * d);
  const double denom = map.b + std::copysign(std::sqrt(disc), map.b);
  double v = denom != 0.0 ? 2.0 * d / denom : 0.5 * (map.v_min + map.v_max);
  for (int it = 0; it < 3; ++it) {
    const double s = map.slope(v);
    if (s == 0.0) break;
    v -= (map.evaluate(v) - target) / s;
  }
  return {std::clamp(v, map.v_min, map.v_max), clamped};
}

}  // namespace proprio
