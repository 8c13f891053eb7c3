#pragma once

#include <span>
#include <utility>
#include <vector>

namespace proprio {

struct CalibrationSample {
  double voltage;      // V
  double orientation;  // rad
};

/// Quadratic voltage -> orientation map, theta = a v^2 + b v + c, valid on [v_min, v_max].
struct CalibrationMap {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double v_min = 0.0;
  double v_max = 0.0;
  double fit_rmse = 0.0;  // rad

  double evaluate(double voltage) const noexcept { return (a * voltage + b) * voltage + c; }
  double slope(double voltage) const noexcept { return 2.0 * a * voltage + b; }

  /// Strict monotonicity over [v_min, v_max]. The derivative is linear in v, so
  /// checking its sign at both ends is sufficient.
  bool is_monotonic() const noexcept;

  /// Orientation range covered by [v_min, v_max], as (low, high).
  std::pair<double, double> orientation_range() const noexcept;
};

struct OrientationReading {
  double theta = 0.0;
  bool clamped = false;
};

struct VoltageReading {
  double voltage = 0.0;
  bool clamped = false;
};

/// Least-squares quadratic fit. Throws FitError on fewer than 3 samples or a
/// rank-deficient design, BijectivityError if the fit is not monotonic over the
/// sampled voltage range.
CalibrationMap fit_calibration(std::span<const CalibrationSample> samples);

/// Evaluates the map at the mean of a paired-sensor reading. Voltages outside
/// the valid range are clamped and flagged; non-finite ones throw InvalidInput.
OrientationReading voltage_to_orientation(const CalibrationMap& map, double v_first,
                                          double v_second);

/// Inverse map; orientations outside the map's range are clamped and flagged.
VoltageReading orientation_to_voltage(const CalibrationMap& map, double theta);

/// One map per sensing segment (each map serves that segment's sensor pair).
using CalibrationSet = std::vector<CalibrationMap>;

}  // namespace proprio
