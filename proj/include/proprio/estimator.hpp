#pragma once

// Shape estimation pipeline: bend voltages -> calibrated angles, IMU yaws ->
// relative segment angles -> drift correction, then two decoupled Kalman
// filters (segment angles and local segment endpoints) composed into a
// world-frame shape.

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "proprio/calibration.hpp"
#include "proprio/drift_correction.hpp"
#include "proprio/kalman.hpp"
#include "proprio/kinematics.hpp"
#include "proprio/sensor_sim.hpp"

namespace proprio {

struct RobotShapeEstimate {
  double t = 0.0;
  Eigen::VectorXd thetas;         // per-segment bend angle, rad
  Points2<double> local_points;   // segment endpoints in their own frames, mm
  Points2<double> world_points;   // sensing points in the world frame, mm
};

/// Per-frame sensor-derived segment angles, before any fusion.
struct FrameMeasurements {
  double t = 0.0;
  Eigen::VectorXd theta_bend;           // calibrated, pair-averaged
  Eigen::VectorXd theta_imu_raw;        // differenced absolute yaws
  Eigen::VectorXd theta_imu_corrected;  // after drift correction
  bool bend_clamped = false;            // some pair read outside its calibrated range
};

/// Relative segment angles from absolute sensing-point yaws (the base is fixed at 0).
Eigen::VectorXd relative_angles(const Eigen::VectorXd& absolute_yaw);

/// Calibration and per-channel drift correction; stateful across frames.
class MeasurementPipeline {
 public:
  MeasurementPipeline(CalibrationSet calibration, DriftCorrectorParams corrector);

  FrameMeasurements process(const SensorFrame& frame);
  void reset();

  const std::vector<DriftCorrector>& correctors() const noexcept { return correctors_; }

 private:
  CalibrationSet calibration_;
  std::vector<DriftCorrector> correctors_;
};

std::vector<FrameMeasurements> preprocess(std::span<const SensorFrame> frames,
                                          const CalibrationSet& calibration,
                                          DriftCorrectorParams corrector);

/// Diagonal noise parameters behind the two filters. Orientation blocks have N
/// entries, coordinate blocks 2N (x1, y1, x2, y2, ...). The h_* gains scale the
/// identity blocks of H = [h_bend I; h_imu I].
struct FusionParams {
  Eigen::VectorXd q_orient, r_bend_orient, r_imu_orient;
  Eigen::VectorXd q_coord, r_bend_coord, r_imu_coord;
  double h_bend_orient = 1.0, h_imu_orient = 1.0;
  double h_bend_coord = 1.0, h_imu_coord = 1.0;

  std::size_t segments() const { return static_cast<std::size_t>(q_orient.size()); }
};

struct FusionConfigs {
  KalmanConfig<double> orient;
  KalmanConfig<double> coord;
};

/// A = I, B = 0, diagonal Q and R, P0 = R_bend block.
FusionConfigs make_configs(const FusionParams& params);

/// Inverse of make_configs for configs with that structure (diagonals and H gains).
FusionParams params_from_configs(const FusionConfigs& configs);

struct NoiseAssumptions {
  ImuNoiseModel imu;
  BendNoiseModel bend;
  DriftCorrectorParams corrector;
  TrajectoryParams trajectory;
  double sample_rate = 10.0;
};

/// Starting point for tuning: variances implied by the sensor noise models,
/// floored at `floor` so a noiseless setup yields a near-exact filter.
FusionParams default_fusion_params(const RobotGeometry& robot, const CalibrationSet& calibration,
                                   const NoiseAssumptions& noise, double floor = 1e-14);

/// One predict/update cycle of the orientation filter with z = [bend; imu].
/// An empty state is initialised from the bend measurement with P = P0.
Eigen::VectorXd fuse_orientation(const Eigen::VectorXd& bend, const Eigen::VectorXd& imu,
                                 std::optional<KalmanState<double>>& state,
                                 const KalmanConfig<double>& config);

/// Same cycle for the coordinate filter over stacked local endpoints.
Points2<double> fuse_coordinates(const Points2<double>& bend_points,
                                 const Points2<double>& imu_points,
                                 std::optional<KalmanState<double>>& state,
                                 const KalmanConfig<double>& config);

/// Both filters plus world composition, fed with preprocessed measurements.
class FusionFilter {
 public:
  FusionFilter(RobotGeometry robot, FusionConfigs configs);

  RobotShapeEstimate step(const FrameMeasurements& m);
  void reset();

  const std::optional<KalmanState<double>>& orient_state() const noexcept { return orient_; }
  const std::optional<KalmanState<double>>& coord_state() const noexcept { return coord_; }

 private:
  RobotGeometry robot_;
  FusionConfigs configs_;
  std::optional<KalmanState<double>> orient_;
  std::optional<KalmanState<double>> coord_;
};

/// Full estimator from raw sensor frames.
class ShapeEstimator {
 public:
  ShapeEstimator(RobotGeometry robot, CalibrationSet calibration, DriftCorrectorParams corrector,
                 FusionConfigs configs);

  /// Errors are rethrown as StageError tagged calibration / drift_correction / fusion.
  RobotShapeEstimate estimate(const SensorFrame& frame);
  void reset();

  const FrameMeasurements& last_measurements() const noexcept { return last_; }

 private:
  MeasurementPipeline measurements_;
  FusionFilter fusion_;
  FrameMeasurements last_;
};

/// Shape from a single set of segment angles (PCC only, no filtering).
RobotShapeEstimate single_sensor_shape(double t, const Eigen::VectorXd& thetas,
                                       const RobotGeometry& robot);

enum class Method { Fusion, Bend, ImuCorrected, ImuRaw };

inline constexpr Method kAllMethods[] = {Method::Fusion, Method::Bend, Method::ImuCorrected,
                                         Method::ImuRaw};

std::string_view to_string(Method method);
Method parse_method(std::string_view name);

/// Runs one estimation method over a preprocessed log.
std::vector<RobotShapeEstimate> run_method(Method method, std::span<const FrameMeasurements> log,
                                           const RobotGeometry& robot,
                                           const FusionConfigs& configs);

}  // namespace proprio
