#include "proprio/estimator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

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

Eigen::MatrixXd diag(const Eigen::VectorXd& v) { return v.asDiagonal(); }

Eigen::VectorXd coord_stack(const Points2<double>& pts) {
  return Eigen::Map<const Eigen::VectorXd>(pts.data(), pts.size());
}

KalmanConfig<double> two_sensor_config(const Eigen::VectorXd& q, const Eigen::VectorXd& r_bend,
                                       const Eigen::VectorXd& r_imu, double h_bend, double h_imu) {
  const Eigen::Index n = q.size();
  if (r_bend.size() != n || r_imu.size() != n)
    throw InvalidInput("fusion parameter blocks have inconsistent sizes");
  auto cfg = KalmanConfig<double>::two_sensor(n, diag(q), diag(r_bend), diag(r_imu));
  cfg.H.topRows(n) *= h_bend;
  cfg.H.bottomRows(n) *= h_imu;
  return cfg;
}

}  // namespace

Eigen::VectorXd relative_angles(const Eigen::VectorXd& absolute_yaw) {
  Eigen::VectorXd rel(absolute_yaw.size());
  double previous = 0.0;
  for (Eigen::Index k = 0; k < absolute_yaw.size(); ++k) {
    rel(k) = absolute_yaw(k) - previous;
    previous = absolute_yaw(k);
  }
  return rel;
}

MeasurementPipeline::MeasurementPipeline(CalibrationSet calibration, DriftCorrectorParams corrector)
    : calibration_(std::move(calibration)), correctors_(calibration_.size(), DriftCorrector(corrector)) {
  if (calibration_.empty()) throw InvalidInput("calibration set is empty");
}

FrameMeasurements MeasurementPipeline::process(const SensorFrame& frame) {
  const auto n = static_cast<Eigen::Index>(calibration_.size());
  if (frame.imu_yaw.size() != n || frame.bend_voltage.cols() != n)
    throw InvalidInput(fmt::format("sensor frame at t={} has {} IMU / {} bend channels, expected {}",
                                   frame.t, frame.imu_yaw.size(), frame.bend_voltage.cols(), n));
  FrameMeasurements m;
  m.t = frame.t;
  m.theta_bend.resize(n);
  in_stage("calibration", [&] {
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto reading = voltage_to_orientation(calibration_[static_cast<std::size_t>(k)],
                                                  frame.bend_voltage(0, k), frame.bend_voltage(1, k));
      m.theta_bend(k) = reading.theta;
      m.bend_clamped = m.bend_clamped || reading.clamped;
    }
  });
  m.theta_imu_raw = relative_angles(frame.imu_yaw);
  m.theta_imu_corrected.resize(n);
  in_stage("drift_correction", [&] {
    for (Eigen::Index k = 0; k < n; ++k)
      m.theta_imu_corrected(k) =
          correctors_[static_cast<std::size_t>(k)].update(m.theta_imu_raw(k), m.theta_bend(k));
  });
  return m;
}

void MeasurementPipeline::reset() {
  for (auto& c : correctors_) c.reset();
}

std::vector<FrameMeasurements> preprocess(std::span<const SensorFrame> frames,
                                          const CalibrationSet& calibration,
                                          DriftCorrectorParams corrector) {
  MeasurementPipeline pipeline(calibration, corrector);
  std::vector<FrameMeasurements> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(pipeline.process(f));
  return out;
}

FusionConfigs make_configs(const FusionParams& p) {
  if (p.q_coord.size() != 2 * p.q_orient.size())
    throw InvalidInput("coordinate blocks must have twice the orientation entries");
  FusionConfigs configs{
      two_sensor_config(p.q_orient, p.r_bend_orient, p.r_imu_orient, p.h_bend_orient, p.h_imu_orient),
      two_sensor_config(p.q_coord, p.r_bend_coord, p.r_imu_coord, p.h_bend_coord, p.h_imu_coord)};
  return configs;
}

FusionParams params_from_configs(const FusionConfigs& configs) {
  auto extract = [](const KalmanConfig<double>& cfg, Eigen::VectorXd& q, Eigen::VectorXd& rb,
                    Eigen::VectorXd& ri, double& hb, double& hi) {
    cfg.validate();
    const Eigen::Index n = cfg.state_dim();
    if (cfg.measurement_dim() != 2 * n)
      throw InvalidInput("fusion configs must stack two measurements per state entry");
    q = cfg.Q.diagonal();
    rb = cfg.R.diagonal().head(n);
    ri = cfg.R.diagonal().tail(n);
    hb = cfg.H(0, 0);
    hi = cfg.H(n, 0);
  };
  FusionParams p;
  extract(configs.orient, p.q_orient, p.r_bend_orient, p.r_imu_orient, p.h_bend_orient, p.h_imu_orient);
  extract(configs.coord, p.q_coord, p.r_bend_coord, p.r_imu_coord, p.h_bend_coord, p.h_imu_coord);
  return p;
}

FusionParams default_fusion_params(const RobotGeometry& robot, const CalibrationSet& calibration,
                                   const NoiseAssumptions& noise, double floor) {
  const auto n = static_cast<Eigen::Index>(robot.size());
  if (static_cast<Eigen::Index>(calibration.size()) != n)
    throw InvalidInput("calibration set size does not match robot");
  const auto& bend = noise.bend;
  const auto& imu = noise.imu;
  const bool drifting = imu.gyro_bias_std > 0.0 || imu.drift_rate_std > 0.0;
  const double residual = drifting ? noise.corrector.threshold * noise.corrector.threshold / 3.0 : 0.0;

  // Per-step RMS motion of one segment under the nominal sweep.
  const double omega = 2.0 * std::numbers::pi / noise.trajectory.sweep_period;
  const double step = noise.trajectory.sweep_amplitude / static_cast<double>(n) * omega /
                      std::sqrt(2.0) / noise.sample_rate;

  FusionParams p;
  p.q_orient.resize(n);
  p.r_bend_orient.resize(n);
  p.r_imu_orient.resize(n);
  p.q_coord.resize(2 * n);
  p.r_bend_coord.resize(2 * n);
  p.r_imu_coord.resize(2 * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& map = calibration[static_cast<std::size_t>(k)];
    const double slope = std::abs(map.slope(0.5 * (map.v_min + map.v_max)));
    const double var_bend = std::pow(bend.voltage_noise_std * slope, 2) / 2.0 +
                            std::pow(bend.hysteresis_width / 2.0, 2) +
                            std::pow(bend.quantization_step * slope, 2) / 24.0;
    const double var_imu = std::pow(imu.yaw_white_noise_std, 2) * (k == 0 ? 1.0 : 2.0) + residual;
    const auto& seg = robot.segments[static_cast<std::size_t>(k)];
    const double lever2 = std::pow(seg.arc_length / 2.0 + seg.offset_length, 2);

    p.q_orient(k) = std::max(step * step, floor);
    p.r_bend_orient(k) = std::max(var_bend, floor);
    p.r_imu_orient(k) = std::max(var_imu, floor);
    for (Eigen::Index c = 0; c < 2; ++c) {
      p.q_coord(2 * k + c) = std::max(lever2 * step * step, floor);
      p.r_bend_coord(2 * k + c) = std::max(lever2 * var_bend, floor);
      p.r_imu_coord(2 * k + c) = std::max(lever2 * var_imu, floor);
    }
  }
  return p;
}

Eigen::VectorXd fuse_orientation(const Eigen::VectorXd& bend, const Eigen::VectorXd& imu,
                                 std::optional<KalmanState<double>>& state,
                                 const KalmanConfig<double>& config) {
  if (bend.size() != imu.size() || bend.size() != config.state_dim())
    throw InvalidInput(fmt::format("fuse_orientation: got {} bend / {} IMU angles for a {}-state filter",
                                   bend.size(), imu.size(), config.state_dim()));
  Eigen::VectorXd z(2 * bend.size());
  z << bend, imu;
  if (!state) {
    state = initial_state(config, bend);
  } else {
    state = predict(std::move(*state), config);
  }
  state = update(std::move(*state), config, z);
  return state->x;
}

Points2<double> fuse_coordinates(const Points2<double>& bend_points,
                                 const Points2<double>& imu_points,
                                 std::optional<KalmanState<double>>& state,
                                 const KalmanConfig<double>& config) {
  if (bend_points.cols() != imu_points.cols() || 2 * bend_points.cols() != config.state_dim())
    throw InvalidInput("fuse_coordinates: point counts do not match the filter");
  const Eigen::VectorXd bend = coord_stack(bend_points);
  Eigen::VectorXd z(2 * bend.size());
  z << bend, coord_stack(imu_points);
  if (!state) {
    state = initial_state(config, bend);
  } else {
    state = predict(std::move(*state), config);
  }
  state = update(std::move(*state), config, z);
  return Eigen::Map<const Points2<double>>(state->x.data(), 2, bend_points.cols());
}

FusionFilter::FusionFilter(RobotGeometry robot, FusionConfigs configs)
    : robot_(std::move(robot)), configs_(std::move(configs)) {
  robot_.validate();
  configs_.orient.validate();
  configs_.coord.validate();
  const auto n = static_cast<Eigen::Index>(robot_.size());
  if (configs_.orient.state_dim() != n || configs_.coord.state_dim() != 2 * n)
    throw InvalidInput(fmt::format("filters sized {}/{} do not match a {}-segment robot",
                                   configs_.orient.state_dim(), configs_.coord.state_dim(), n));
}

RobotShapeEstimate FusionFilter::step(const FrameMeasurements& m) {
  RobotShapeEstimate est;
  est.t = m.t;
  const Points2<double> bend_local = local_endpoints(robot_.span(), m.theta_bend);
  const Points2<double> imu_local = local_endpoints(robot_.span(), m.theta_imu_corrected);
  est.local_points = fuse_coordinates(bend_local, imu_local, coord_, configs_.coord);
  est.thetas = fuse_orientation(m.theta_bend, m.theta_imu_corrected, orient_, configs_.orient);
  est.world_points = compose_world(est.local_points, est.thetas);
  return est;
}

void FusionFilter::reset() {
  orient_.reset();
  coord_.reset();
}

ShapeEstimator::ShapeEstimator(RobotGeometry robot, CalibrationSet calibration,
                               DriftCorrectorParams corrector, FusionConfigs configs)
    : measurements_(std::move(calibration), corrector),
      fusion_(std::move(robot), std::move(configs)) {}

RobotShapeEstimate ShapeEstimator::estimate(const SensorFrame& frame) {
  last_ = measurements_.process(frame);
  return in_stage("fusion", [&] { return fusion_.step(last_); });
}

void ShapeEstimator::reset() {
  measurements_.reset();
  fusion_.reset();
}

RobotShapeEstimate single_sensor_shape(double t, const Eigen::VectorXd& thetas,
                                       const RobotGeometry& robot) {
  RobotShapeEstimate est;
  est.t = t;
  est.thetas = thetas;
  est.local_points = local_endpoints(robot.span(), thetas);
  est.world_points = compose_world(est.local_points, thetas);
  return est;
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Fusion: return "Fusion";
    case Method::Bend: return "Bend";
    case Method::ImuCorrected: return "IMU_C";
    case Method::ImuRaw: return "IMU_O";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "fusion") return Method::Fusion;
  if (lower == "bend") return Method::Bend;
  if (lower == "imu_c" || lower == "imu-c") return Method::ImuCorrected;
  if (lower == "imu_o" || lower == "imu-o") return Method::ImuRaw;
  throw InvalidInput(fmt::format("unknown method '{}' (expected fusion, bend, imu_c, imu_o)", name));
}

std::vector<RobotShapeEstimate> run_method(Method method, std::span<const FrameMeasurements> log,
                                           const RobotGeometry& robot,
                                           const FusionConfigs& configs) {
  std::vector<RobotShapeEstimate> out;
  out.reserve(log.size());
  switch (method) {
    case Method::Fusion: {
      FusionFilter filter(robot, configs);
      for (const auto& m : log) out.push_back(in_stage("fusion", [&] { return filter.step(m); }));
      break;
    }
    case Method::Bend:
      for (const auto& m : log) out.push_back(single_sensor_shape(m.t, m.theta_bend, robot));
      break;
    case Method::ImuCorrected:
      for (const auto& m : log) out.push_back(single_sensor_shape(m.t, m.theta_imu_corrected, robot));
      break;
    case Method::ImuRaw:
      for (const auto& m : log) out.push_back(single_sensor_shape(m.t, m.theta_imu_raw, robot));
      break;
  }
  return out;
}

}  // namespace proprio
