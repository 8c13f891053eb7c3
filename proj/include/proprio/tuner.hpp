#pragma once

// Offline gradient-descent tuning of the fusion filters' noise parameters
// against ground truth.

#include <span>
#include <string>
#include <vector>

#include "proprio/estimator.hpp"

namespace proprio {

struct TunerSpec {
  double learning_rate = 0.5;     // initial step in log-variance space
  int max_iters = 40;
  double convergence_tol = 1e-3;  // objective units
  double fd_step = 1e-4;          // relative: h = fd_step * (1 + |p|)
  int max_backtracks = 8;

  bool tune_q = true;
  bool tune_r = true;
  bool tune_h = false;       // H gains; frozen by default
  bool per_entry = false;    // one parameter per diagonal entry instead of one scale per block
  bool tune_orient = true;
  bool tune_coord = true;

  double orientation_weight = 1.0;  // objective = position RMSE (mm) + weight * orientation RMSE (deg)
  double variance_floor = 1e-9;
  int jobs = 1;

  void validate() const;
};

/// Preprocessed training log with its ground truth. Calibration and drift
/// correction do not depend on the tuned parameters, so they run once.
struct TrainingData {
  RobotGeometry robot;
  std::vector<FrameMeasurements> measurements;
  std::vector<GroundTruthFrame> truth;

  void validate() const;
};

struct ObjectiveValue {
  double value = 0.0;             // +inf when the filter diverged
  double position_rmse = 0.0;     // end effector, mm
  double orientation_rmse = 0.0;  // segment angles, rad
};

ObjectiveValue objective(const FusionConfigs& configs, const TrainingData& data,
                         double orientation_weight = 1.0);

struct TunerIteration {
  int iteration = 0;
  ObjectiveValue objective;
  double step = 0.0;  // accepted step size (0 for the initial point)
  int backtracks = 0;
  FusionParams params;
};

struct TunerReport {
  std::vector<TunerIteration> trace;  // accepted iterates, starting with the initial point
  FusionConfigs configs;              // best configs found
  bool converged = false;
  std::string stop_reason;
  int evaluations = 0;

  const ObjectiveValue& initial() const { return trace.front().objective; }
  const ObjectiveValue& best() const { return trace.back().objective; }
};

TunerReport tune(const TunerSpec& spec, const FusionConfigs& initial, const TrainingData& data);

}  // namespace proprio
