#pragma once

#include <cstddef>
#include <deque>
#include <numbers>

namespace proprio {

struct DriftCorrectorParams {
  std::size_t window_size = 100;
  double threshold = 0.5 * std::numbers::pi / 180.0;  // rad
};

/// Re-zeroes one IMU orientation channel against the drift-free bend-sensor
/// orientation. The offset between the moving averages of the two signals is
/// latched whenever it moves more than `threshold` away from the currently
/// applied offset; between latches the correction is a constant shift.
class DriftCorrector {
 public:
  explicit DriftCorrector(DriftCorrectorParams params = {});

  /// Pushes one sample pair and returns the corrected IMU orientation.
  /// Throws InvalidInput on non-finite readings.
  double update(double theta_imu, double theta_bend);

  void reset();

  double accumulated_offset() const noexcept { return accumulated_offset_; }
  std::size_t buffered() const noexcept { return imu_window_.size(); }
  const DriftCorrectorParams& params() const noexcept { return params_; }

 private:
  DriftCorrectorParams params_;
  std::deque<double> imu_window_;
  std::deque<double> bend_window_;
  double imu_sum_ = 0.0;
  double bend_sum_ = 0.0;
  double accumulated_offset_ = 0.0;
};

}  // namespace proprio
