#include "proprio/experiment.hpp"

#include <cmath>

#include <fmt/format.h>

#include "proprio/errors.hpp"

namespace proprio {

namespace {

template <typename Fn>
auto in_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  sim.robot.validate();
  sim.imu.validate();
  sim.bend.validate();
  tuner.validate();
  if (!(sample_rate > 0.0)) throw InvalidInput("sample_rate must be > 0");
  if (!(scenario_duration > 0.0)) throw InvalidInput("scenario_duration must be > 0");
  if (!(training_duration > 0.0)) throw InvalidInput("training_duration must be > 0");
  if (!sim.sensors.empty() && sim.sensors.size() != sim.robot.size())
    throw InvalidInput("sensor characteristics do not match the robot");
  DriftCorrector check(corrector);
}

std::uint64_t training_seed(std::uint64_t seed) { return seed + 0x9E3779B97F4A7C15ull; }

CalibrationSet calibrate_from_run(const ScenarioRun& run) {
  if (run.truth.empty()) throw InvalidInput("calibration log is empty");
  const Eigen::Index n = run.truth.front().thetas.size();
  CalibrationSet maps;
  std::vector<CalibrationSample> samples;
  samples.reserve(2 * run.truth.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    samples.clear();
    for (std::size_t j = 0; j < run.truth.size(); ++j) {
      const double theta = run.truth[j].thetas(k);
      samples.push_back({run.sensors[j].bend_voltage(0, k), theta});
      samples.push_back({run.sensors[j].bend_voltage(1, k), theta});
    }
    try {
      maps.push_back(fit_calibration(samples));
    } catch (const Error& e) {
      throw StageError("calibration", fmt::format("segment {}: {}", k + 1, e.what()));
    }
  }
  return maps;
}

NoiseAssumptions noise_assumptions(const ExperimentConfig& config) {
  return {config.sim.imu, config.sim.bend, config.corrector, config.sim.trajectory,
          config.sample_rate};
}

TrainingData training_data(const ScenarioRun& training, const RobotGeometry& robot,
                           const CalibrationSet& calibration, DriftCorrectorParams corrector) {
  TrainingData data;
  data.robot = robot;
  data.measurements = preprocess(training.sensors, calibration, corrector);
  data.truth = training.truth;
  return data;
}

TrainedModel train(const ExperimentConfig& config, const ScenarioRun& training) {
  TrainedModel model;
  model.calibration = calibrate_from_run(training);
  const auto data = in_stage("calibration", [&] {
    return training_data(training, config.sim.robot, model.calibration, config.corrector);
  });
  model.report = in_stage("tuning", [&] {
    const auto initial = make_configs(default_fusion_params(config.sim.robot, model.calibration,
                                                            noise_assumptions(config)));
    return tune(config.tuner, initial, data);
  });
  model.configs = model.report.configs;
  return model;
}

TrainedModel train(const ExperimentConfig& config) {
  config.validate();
  const ScenarioSpec spec{ScenarioKind::Training, config.training_duration, config.sample_rate,
                          training_seed(config.seed)};
  const auto run = in_stage("simulation", [&] { return simulate(spec, config.sim); });
  return train(config, run);
}

ScenarioEvaluation evaluate_scenarios(const ExperimentConfig& config, const TrainedModel& model) {
  config.validate();
  ScenarioEvaluation out;
  for (ScenarioKind kind : kEvaluationScenarios) {
    const ScenarioSpec spec{kind, config.scenario_duration, config.sample_rate, config.seed};
    const auto run = in_stage("simulation", [&] { return simulate(spec, config.sim); });

    ScenarioSummary summary;
    summary.kind = kind;
    summary.seed = spec.seed;
    summary.frames = run.truth.size();
    summary.saturated_frames = run.saturated_frames;
    summary.pcc_violation_intervals = run.pcc_violation_intervals();
    try {
      for (const auto& m : preprocess(run.sensors, model.calibration, config.corrector))
        if (m.bend_clamped) ++summary.bend_clamped_frames;
    } catch (const Error&) {
      // Reported through the method rows.
    }
    out.scenarios.push_back(std::move(summary));

    auto rows = in_stage("evaluation", [&] {
      return compare_methods(run, config.sim.robot, model.calibration, config.corrector,
                             model.configs);
    });
    for (auto& r : rows) out.rows.push_back(std::move(r));
  }
  auto merged = union_rows(out.rows, config.sim.robot.total_length());
  for (auto& r : merged) out.rows.push_back(std::move(r));
  return out;
}

std::vector<DriftTracePoint> drift_trace(const ScenarioRun& run, const CalibrationSet& calibration,
                                         DriftCorrectorParams corrector, std::size_t segment) {
  if (run.truth.empty()) return {};
  const auto k = static_cast<Eigen::Index>(segment);
  if (k >= run.truth.front().thetas.size()) throw InvalidInput("drift trace segment out of range");
  const auto log = preprocess(run.sensors, calibration, corrector);
  std::vector<DriftTracePoint> trace;
  trace.reserve(log.size());
  for (std::size_t j = 0; j < log.size(); ++j)
    trace.push_back({log[j].t, run.truth[j].thetas(k), log[j].theta_imu_raw(k),
                     log[j].theta_imu_corrected(k), log[j].theta_bend(k)});
  return trace;
}

DriftErrors final_drift_errors(std::span<const DriftTracePoint> trace, std::size_t window) {
  if (trace.empty() || window == 0) throw InvalidInput("empty drift trace");
  const std::size_t w = std::min(window, trace.size());
  double raw = 0.0, corrected = 0.0;
  for (std::size_t j = trace.size() - w; j < trace.size(); ++j) {
    raw += trace[j].imu_raw - trace[j].truth;
    corrected += trace[j].imu_corrected - trace[j].truth;
  }
  return {std::abs(raw / static_cast<double>(w)), std::abs(corrected / static_cast<double>(w))};
}

ExperimentResult reproduce(const ExperimentConfig& config) {
  ExperimentResult result;
  result.model = train(config);
  result.evaluation = evaluate_scenarios(config, result.model);
  const ScenarioSpec spec{ScenarioKind::FreeSwing, config.scenario_duration, config.sample_rate,
                          config.seed};
  const auto run = simulate(spec, config.sim);
  result.trace = drift_trace(run, result.model.calibration, config.corrector, 0);
  result.trace_final = final_drift_errors(result.trace, config.corrector.window_size);
  return result;
}

}  // namespace proprio
