#pragma once

// End-to-end protocol: simulate a training log, fit the calibration, tune the
// filters, then compare the four methods on scenarios I-III.

#include <cstdint>
#include <utility>
#include <vector>

#include "proprio/evaluation.hpp"
#include "proprio/tuner.hpp"

namespace proprio {

struct ExperimentConfig {
  SimulationConfig sim;
  DriftCorrectorParams corrector;
  TunerSpec tuner;
  double sample_rate = 10.0;          // Hz
  double scenario_duration = 900.0;   // s, per evaluation scenario
  double training_duration = 1200.0;  // s
  std::uint64_t seed = 1;

  void validate() const;
};

inline constexpr ScenarioKind kEvaluationScenarios[] = {
    ScenarioKind::FreeSwing, ScenarioKind::ExternalForce, ScenarioKind::Obstacle};

/// Seed of the training log derived from the experiment seed, so training and
/// evaluation never share noise draws.
std::uint64_t training_seed(std::uint64_t seed);

/// One quadratic map per segment, fitted on both sensors of the pair against
/// the logged ground-truth angle.
CalibrationSet calibrate_from_run(const ScenarioRun& run);

NoiseAssumptions noise_assumptions(const ExperimentConfig& config);

struct TrainedModel {
  CalibrationSet calibration;
  FusionConfigs configs;
  TunerReport report;
};

TrainingData training_data(const ScenarioRun& training, const RobotGeometry& robot,
                           const CalibrationSet& calibration, DriftCorrectorParams corrector);

/// Fit and tune on a training log.
TrainedModel train(const ExperimentConfig& config, const ScenarioRun& training);
TrainedModel train(const ExperimentConfig& config);

struct ScenarioSummary {
  ScenarioKind kind = ScenarioKind::FreeSwing;
  std::uint64_t seed = 0;
  std::size_t frames = 0;
  std::size_t saturated_frames = 0;       // simulated sensor left its physical range
  std::size_t bend_clamped_frames = 0;    // reading outside the calibrated range
  std::vector<std::pair<double, double>> pcc_violation_intervals;
};

struct ScenarioEvaluation {
  std::vector<MethodResult> rows;  // per scenario, then the union rows
  std::vector<ScenarioSummary> scenarios;
};

/// Runs scenarios I-III with the experiment seed against a trained model.
ScenarioEvaluation evaluate_scenarios(const ExperimentConfig& config, const TrainedModel& model);

struct DriftTracePoint {
  double t = 0.0;
  double truth = 0.0;      // rad
  double imu_raw = 0.0;
  double imu_corrected = 0.0;
  double bend = 0.0;
};

/// Segment-angle traces of one channel through calibration and drift correction.
std::vector<DriftTracePoint> drift_trace(const ScenarioRun& run, const CalibrationSet& calibration,
                                         DriftCorrectorParams corrector, std::size_t segment);

struct DriftErrors {
  double raw = 0.0;        // rad
  double corrected = 0.0;  // rad
};

/// |mean(estimate - truth)| over the last `window` samples of a trace.
DriftErrors final_drift_errors(std::span<const DriftTracePoint> trace, std::size_t window);

struct ExperimentResult {
  TrainedModel model;
  ScenarioEvaluation evaluation;
  std::vector<DriftTracePoint> trace;  // scenario I, first segment
  DriftErrors trace_final;
};

ExperimentResult reproduce(const ExperimentConfig& config);

}  // namespace proprio
