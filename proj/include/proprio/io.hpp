#pragma once

// File formats: CSV logs and results, JSON configs and reports, run manifests.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "proprio/experiment.hpp"

namespace proprio {

using json = nlohmann::ordered_json;

/// Shortest representation that round-trips exactly.
std::string format_double(double value);

// Sensor log: t, imu_yaw_1..N, bendA_v_1..N, bendB_v_1..N (rad, V).
void write_sensor_csv(const std::filesystem::path& path, std::span<const SensorFrame> frames);
std::vector<SensorFrame> read_sensor_csv(const std::filesystem::path& path);

// Ground truth: t, theta_1..N, x_1..N, y_1..N (rad, mm).
void write_truth_csv(const std::filesystem::path& path, std::span<const GroundTruthFrame> truth);
std::vector<GroundTruthFrame> read_truth_csv(const std::filesystem::path& path);

// Shape estimates, same layout as the ground-truth CSV.
void write_estimate_csv(const std::filesystem::path& path,
                        std::span<const RobotShapeEstimate> estimates);

json to_json(const RobotGeometry& robot);
RobotGeometry robot_from_json(const json& j);

json to_json(const CalibrationSet& maps);
CalibrationSet calibration_from_json(const json& j);

json to_json(const KalmanConfig<double>& cfg);
KalmanConfig<double> kalman_config_from_json(const json& j);

json to_json(const FusionConfigs& configs);
FusionConfigs fusion_configs_from_json(const json& j);

json to_json(const FusionParams& params);

json to_json(const TunerReport& report);

/// Full run configuration. Reading starts from the defaults and overrides
/// whatever keys are present.
json to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const json& j);

json to_json(const ScenarioSummary& summary);

/// One row per scenario x method.
void write_results_csv(const std::filesystem::path& path, std::span<const MethodResult> rows);
/// Methods as rows, scenarios as columns, cells are RMSE in mm.
void write_table_csv(const std::filesystem::path& path, std::span<const MethodResult> rows);
/// Long format for plotting: scenario, method, series (ee_error | p75), index, value.
void write_plot_csv(const std::filesystem::path& path, std::span<const MethodResult> rows);
json to_json(std::span<const MethodResult> rows);

void write_drift_trace_csv(const std::filesystem::path& path,
                           std::span<const DriftTracePoint> trace);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);

std::string sha256_hex(const std::string& data);

/// Provenance block attached to every output: config hash, seed, module versions.
json make_manifest(const json& config, std::uint64_t seed, const std::string& command);

}  // namespace proprio
