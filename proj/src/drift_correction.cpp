#include "proprio/drift_correction.hpp"

#include <cmath>

#include "proprio/errors.hpp"

namespace proprio {

DriftCorrector::DriftCorrector(DriftCorrectorParams params) : params_(params) {
  if (params_.window_size < 1) throw InvalidInput("drift corrector window_size must be >= 1");
  if (!(params_.threshold >= 0.0)) throw InvalidInput("drift corrector threshold must be >= 0");
}

double DriftCorrector::update(double theta_imu, double theta_bend) {
  if (!std::isfinite(theta_imu) || !std::isfinite(theta_bend))
    throw InvalidInput("drift corrector received a non-finite reading");

  imu_window_.push_back(theta_imu);
  bend_window_.push_back(theta_bend);
  imu_sum_ += theta_imu;
  bend_sum_ += theta_bend;
  if (imu_window_.size() > params_.window_size) {
    imu_sum_ -= imu_window_.front();
    bend_sum_ -= bend_window_.front();
    imu_window_.pop_front();
    bend_window_.pop_front();
  }

  const auto count = static_cast<double>(imu_window_.size());
  const double offset = (imu_sum_ - bend_sum_) / count;
  if (std::abs(offset - accumulated_offset_) > params_.threshold) accumulated_offset_ = offset;
  return theta_imu - accumulated_offset_;
}

void DriftCorrector::reset() {
  imu_window_.clear();
  bend_window_.clear();
  imu_sum_ = 0.0;
  bend_sum_ = 0.0;
  accumulated_offset_ = 0.0;
}

}  // namespace proprio
