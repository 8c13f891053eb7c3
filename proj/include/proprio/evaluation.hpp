#pragma once

// Error metrics and the four-method comparison.

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "proprio/estimator.hpp"
#include "proprio/sensor_sim.hpp"

namespace proprio {

/// Euclidean distance per sensing point; the last entry is the end effector.
Eigen::VectorXd frame_error(const RobotShapeEstimate& estimate, const GroundTruthFrame& gt);

struct TimeJoin {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (estimate, ground truth)
  std::size_t skipped = 0;                                 // estimates with no match
};

/// Nearest-neighbour match of each estimate time to a ground-truth time within
/// `tolerance`. Both sequences must be sorted.
TimeJoin join_by_time(std::span<const double> estimate_t, std::span<const double> gt_t,
                      double tolerance);

/// Linear interpolation between closest ranks, q in [0, 100].
double percentile(std::vector<double> values, double q);

struct FrameErrors {
  std::vector<Eigen::VectorXd> per_point;  // one row of point errors per joined frame
  std::vector<double> orientation;         // RMS segment-angle error per frame, rad
  std::size_t skipped = 0;
};

FrameErrors compute_errors(std::span<const RobotShapeEstimate> estimates,
                           std::span<const GroundTruthFrame> truth, double sample_rate);

struct MethodResult {
  Method method = Method::Fusion;
  std::string scenario;
  FrameErrors frames;
  std::vector<double> errors;  // end-effector error per frame, mm
  double rmse = 0.0;
  double rmse_pct = 0.0;  // of total arm length
  double mae = 0.0;
  double q1 = 0.0, median = 0.0, q3 = 0.0;
  Eigen::VectorXd p75;  // 75th-percentile radius per sensing point, mm
  double orientation_rmse = 0.0;  // rad
  std::string failure;  // non-empty when the method could not run

  bool ok() const { return failure.empty(); }
};

MethodResult summarize(Method method, std::string scenario, const FrameErrors& errors,
                       double total_length);

/// Runs Fusion, Bend, IMU_C and IMU_O on the same log. A failing method is
/// reported with `failure` set while the others still run.
std::vector<MethodResult> compare_methods(const ScenarioRun& run, const RobotGeometry& robot,
                                          const CalibrationSet& calibration,
                                          DriftCorrectorParams corrector,
                                          const FusionConfigs& configs);

/// Per-method rows over the concatenated frames of several scenarios.
std::vector<MethodResult> union_rows(std::span<const MethodResult> rows, double total_length,
                                     std::string scenario = "union");

}  // namespace proprio
