#pragma once

// Ground-truth trajectories for the validation scenarios and synthetic IMU /
// bend-sensor measurements generated from them.

#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "proprio/calibration.hpp"
#include "proprio/kinematics.hpp"

namespace proprio {

inline constexpr double kDeg = std::numbers::pi / 180.0;

enum class ScenarioKind {
  FreeSwing,      // I: lateral sweep, no external load
  ExternalForce,  // II: sweep plus random force impulses
  Obstacle,       // III: sweep with obstacle contact and wrapping
  Training,       // calibration / tuning log: 2/3 sweep, 1/3 random curvature
};

std::string_view to_string(ScenarioKind kind);
/// Accepts "I", "II", "III", "train" (case-insensitive). Throws InvalidInput.
ScenarioKind parse_scenario(std::string_view name);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::FreeSwing;
  double duration = 60.0;      // s
  double sample_rate = 10.0;   // Hz
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t frame_count() const;
};

struct TrajectoryParams {
  double sweep_amplitude = 50.0 * kDeg;  // bound on |sum of bend angles|
  double sweep_period = 16.0;            // s
  double phase_lag = 0.35;               // rad of phase per segment along the chain
  double modulation_depth = 0.3;         // slow per-segment amplitude modulation, [0, 1)
  double modulation_period = 67.0;       // s

  // Scenario II force impulses (Poisson arrivals, half-sine perturbations).
  double force_rate = 0.1;  // events per second
  double force_duration_min = 0.5;
  double force_duration_max = 2.0;
  double force_amplitude_min = 5.0 * kDeg;
  double force_amplitude_max = 15.0 * kDeg;

  // Scenario III obstacle contact. Contact engages once the sweep exceeds
  // `contact_onset` of its amplitude; the contact segment is pinned at
  // `contact_angle` while distal segments wrap by up to `wrap_angle` each.
  int contact_segment = 3;
  double contact_onset = 0.35;
  double contact_ramp = 0.3;
  double contact_angle = -2.0 * kDeg;
  double wrap_angle = 10.0 * kDeg;
  // Deviation of the proximal bend fraction from 1/2 at full contact, for the
  // contact segment and its distal neighbour.
  double curvature_split = 0.3;

  // Training log.
  double training_sweep_fraction = 2.0 / 3.0;
  double random_hold = 4.0;  // s between random curvature targets
  double random_amplitude = 12.0 * kDeg;
};

struct GroundTruthFrame {
  double t = 0.0;
  Eigen::VectorXd thetas;             // per-segment bend angle, rad
  Eigen::VectorXd proximal_fraction;  // share of each bend in the proximal half; 0.5 = constant curvature
  Points2<double> world_points;       // sensing-point positions, mm
  bool pcc_violation = false;         // some segment has non-constant curvature
  double contact_depth = 0.0;         // scenario III contact engagement, [0, 1]
  bool force_active = false;          // scenario II impulse in progress
};

/// Ground-truth trajectory for the scenario. Throws InvalidInput on bad specs.
std::vector<GroundTruthFrame> generate_trajectory(const ScenarioSpec& spec,
                                                  const RobotGeometry& robot,
                                                  const TrajectoryParams& params = {});

/// Local endpoint of a segment whose bend is split unevenly between its two halves.
Vector2<double> split_segment_endpoint(const SegmentGeometry<double>& geom, double theta,
                                       double proximal_fraction);

/// Cumulative orientation of every sensing point (sum of bend angles up to it).
Eigen::VectorXd absolute_orientations(const Eigen::VectorXd& thetas);

struct ImuNoiseModel {
  double yaw_white_noise_std = 0.0;      // rad
  double drift_rate_std = 0.0;           // rad/sqrt(s), random-walk yaw bias
  double gyro_bias_std = 0.0;            // rad/s, per-channel constant rate bias
  double acceleration_spike_gain = 0.0;  // rad per mm/s^2 of lateral acceleration

  void validate() const;
  /// Calibrated so the median channel drifts ~45 deg over 900 s.
  static ImuNoiseModel defaults();
};

struct BendNoiseModel {
  double voltage_noise_std = 0.0;  // V, per sensor
  double hysteresis_width = 0.0;   // rad, loading vs unloading difference
  double quantization_step = 0.0;  // V
  // How strongly the sensor reading follows the proximal half of a segment
  // with non-constant curvature (0: reads the total bend exactly).
  double nonuniform_curvature_gain = 0.0;
  double reference_voltage = 3.3;  // ADC full scale

  void validate() const;
  static BendNoiseModel defaults();
};

/// Per-frame absolute yaw of each sensing point: truth + bias + noise + spike.
std::vector<Eigen::VectorXd> synthesize_imu(std::span<const GroundTruthFrame> truth,
                                            const ImuNoiseModel& model, std::uint64_t seed);

struct BendSynthesis {
  std::vector<Eigen::Matrix2Xd> voltages;  // row 0: sensor A, row 1: sensor B
  std::vector<bool> saturated;             // some sensor left its physical range
};

/// Paired bend-sensor voltages produced through the sensors' true characteristics.
BendSynthesis synthesize_bend(std::span<const GroundTruthFrame> truth, const BendNoiseModel& model,
                              const CalibrationSet& sensors, std::uint64_t seed);

/// Plausible flex-sensor characteristics for `count` sensor pairs, drawn from `rig_seed`.
CalibrationSet default_sensor_characteristics(std::size_t count, std::uint64_t rig_seed = 2024);

struct SensorFrame {
  double t = 0.0;
  Eigen::VectorXd imu_yaw;        // rad
  Eigen::Matrix2Xd bend_voltage;  // V, paired sensors per segment
};

struct SimulationConfig {
  RobotGeometry robot = RobotGeometry::default_arm();
  TrajectoryParams trajectory;
  ImuNoiseModel imu = ImuNoiseModel::defaults();
  BendNoiseModel bend = BendNoiseModel::defaults();
  CalibrationSet sensors;  // empty: default_sensor_characteristics()

  /// Same setup with every noise, drift and hysteresis term zeroed.
  SimulationConfig noiseless() const;
  /// `sensors`, or the default characteristics sized to the robot when empty.
  CalibrationSet sensor_characteristics() const;
};

struct ScenarioRun {
  ScenarioSpec spec;
  std::vector<GroundTruthFrame> truth;
  std::vector<SensorFrame> sensors;
  std::size_t saturated_frames = 0;

  /// [start, end] times of intervals with non-constant segment curvature.
  std::vector<std::pair<double, double>> pcc_violation_intervals() const;
};

/// Trajectory plus sensor log. Sensor noise streams depend only on `spec.seed`,
/// so runs of different scenarios with one seed share their IMU bias paths.
ScenarioRun simulate(const ScenarioSpec& spec, const SimulationConfig& config);

/// Independent RNG stream keyed by (seed, stream, channel).
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t channel = 0);

}  // namespace proprio
