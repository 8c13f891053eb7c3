#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "proprio/errors.hpp"
#include "proprio/tuner.hpp"

using namespace proprio;

namespace {

constexpr double kSigmaBend = 2.0 * kDeg;
constexpr double kSigmaImu = 1.0 * kDeg;
constexpr double kSigmaWalk = 0.5 * kDeg;

// One segment following a random walk, observed by two unbiased sensors with
// known white noise.
TrainingData scalar_data(std::uint64_t seed, std::size_t frames = 4000) {
  TrainingData data;
  data.robot = RobotGeometry::uniform(1, 80.0, 0.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  double theta = 0.0;
  for (std::size_t j = 0; j < frames; ++j) {
    theta = std::clamp(theta + kSigmaWalk * unit(rng), -1.0, 1.0);
    GroundTruthFrame gt;
    gt.t = 0.1 * static_cast<double>(j);
    gt.thetas = Eigen::VectorXd::Constant(1, theta);
    gt.proximal_fraction = Eigen::VectorXd::Constant(1, 0.5);
    gt.world_points = chain_to_world(data.robot.span(), gt.thetas);
    FrameMeasurements m;
    m.t = gt.t;
    m.theta_bend = Eigen::VectorXd::Constant(1, theta + kSigmaBend * unit(rng));
    m.theta_imu_raw = Eigen::VectorXd::Constant(1, theta + kSigmaImu * unit(rng));
    m.theta_imu_corrected = m.theta_imu_raw;
    data.truth.push_back(gt);
    data.measurements.push_back(m);
  }
  return data;
}

FusionParams scalar_params(double q, double rb, double ri) {
  FusionParams p;
  const double lever2 = 40.0 * 40.0;
  p.q_orient = Eigen::VectorXd::Constant(1, q);
  p.r_bend_orient = Eigen::VectorXd::Constant(1, rb);
  p.r_imu_orient = Eigen::VectorXd::Constant(1, ri);
  p.q_coord = Eigen::VectorXd::Constant(2, lever2 * q);
  p.r_bend_coord = Eigen::VectorXd::Constant(2, lever2 * rb);
  p.r_imu_coord = Eigen::VectorXd::Constant(2, lever2 * ri);
  return p;
}

FusionConfigs mistuned() {
  return make_configs(scalar_params(kSigmaWalk * kSigmaWalk, kSigmaBend * kSigmaBend / 100.0,
                                    kSigmaImu * kSigmaImu));
}

TunerSpec fast_spec() {
  TunerSpec spec;
  spec.max_iters = 30;
  return spec;
}

}  // namespace

TEST(Objective, NoiselessNearZero) {
  const auto cfg = SimulationConfig{}.noiseless();
  const auto run = simulate({ScenarioKind::Training, 60.0, 10.0, 2}, cfg);
  const auto cal = cfg.sensor_characteristics();
  TrainingData data{cfg.robot, preprocess(run.sensors, cal, {}), run.truth};
  const NoiseAssumptions noise{cfg.imu, cfg.bend, {}, cfg.trajectory, 10.0};
  const auto v = objective(make_configs(default_fusion_params(cfg.robot, cal, noise)), data);
  EXPECT_LT(v.value, 1e-3);
}

TEST(Objective, Validation) {
  auto data = scalar_data(1, 10);
  data.truth.pop_back();
  EXPECT_THROW(objective(mistuned(), data), InvalidInput);
}

TEST(Tuner, TraceNonIncreasing) {
  const auto data = scalar_data(2);
  for (bool per_entry : {false, true}) {
    auto spec = fast_spec();
    spec.per_entry = per_entry;
    const auto report = tune(spec, mistuned(), data);
    ASSERT_GE(report.trace.size(), 2u);
    for (std::size_t i = 1; i < report.trace.size(); ++i)
      EXPECT_LE(report.trace[i].objective.value, report.trace[i - 1].objective.value);
    EXPECT_LT(report.best().value, report.initial().value);
    EXPECT_GT(report.evaluations, static_cast<int>(report.trace.size()));
    EXPECT_FALSE(report.stop_reason.empty());
  }
}

TEST(Tuner, RecoversNoiseRatio) {
  const auto data = scalar_data(3);
  auto spec = fast_spec();
  spec.tune_q = false;
  spec.tune_coord = false;
  spec.max_iters = 60;
  const auto report = tune(spec, mistuned(), data);
  const auto p = params_from_configs(report.configs);
  const double ratio = p.r_imu_orient(0) / p.r_bend_orient(0);
  const double expected = (kSigmaImu * kSigmaImu) / (kSigmaBend * kSigmaBend);
  EXPECT_GT(ratio, expected / 2.0);
  EXPECT_LT(ratio, expected * 2.0);
  // Coordinate filter was frozen.
  EXPECT_EQ(report.configs.coord.R, mistuned().coord.R);
}

TEST(Tuner, AlreadyOptimalStopsQuickly) {
  const auto data = scalar_data(4);
  const auto first = tune(fast_spec(), mistuned(), data);
  const auto again = tune(fast_spec(), first.configs, data);
  EXPECT_LE(again.trace.size(), 2u);
  EXPECT_LE(again.best().value, first.best().value);
}

TEST(Tuner, DeterministicAndParallelInvariant) {
  const auto data = scalar_data(5, 1500);
  auto spec = fast_spec();
  spec.max_iters = 8;
  const auto a = tune(spec, mistuned(), data);
  const auto b = tune(spec, mistuned(), data);
  spec.jobs = 3;
  const auto c = tune(spec, mistuned(), data);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  ASSERT_EQ(a.trace.size(), c.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].objective.value, b.trace[i].objective.value);
    EXPECT_EQ(a.trace[i].objective.value, c.trace[i].objective.value);
  }
  EXPECT_EQ(a.configs.orient.R, c.configs.orient.R);
  EXPECT_EQ(a.evaluations, c.evaluations);
}

TEST(Tuner, GeneralizesToHeldOutLog) {
  const auto train = scalar_data(6);
  const auto held_out = scalar_data(7);
  const auto report = tune(fast_spec(), mistuned(), train);
  const double on_train = objective(report.configs, train).value;
  const double on_held_out = objective(report.configs, held_out).value;
  EXPECT_LE(on_held_out, 1.5 * on_train);
  EXPECT_LT(on_held_out, objective(mistuned(), held_out).value);
}

TEST(Tuner, GainsFrozenUnlessRequested) {
  const auto data = scalar_data(8, 1000);
  auto spec = fast_spec();
  spec.max_iters = 5;
  const auto frozen = params_from_configs(tune(spec, mistuned(), data).configs);
  EXPECT_EQ(frozen.h_bend_orient, 1.0);
  EXPECT_EQ(frozen.h_imu_coord, 1.0);
  spec.tune_h = true;
  const auto report = tune(spec, mistuned(), data);
  for (std::size_t i = 1; i < report.trace.size(); ++i)
    EXPECT_LE(report.trace[i].objective.value, report.trace[i - 1].objective.value);
}

TEST(Tuner, VarianceFloorRespected) {
  const auto data = scalar_data(9, 1000);
  auto spec = fast_spec();
  spec.variance_floor = 1e-5;
  spec.learning_rate = 20.0;
  const auto report = tune(spec, mistuned(), data);
  for (const auto& it : report.trace) {
    EXPECT_GE(it.params.q_orient.minCoeff(), 1e-5);
    EXPECT_GE(it.params.r_bend_orient.minCoeff(), 1e-5);
    EXPECT_GE(it.params.r_imu_coord.minCoeff(), 1e-5);
  }
}

TEST(TunerSpec, Validation) {
  const auto data = scalar_data(1, 50);
  TunerSpec spec;
  spec.learning_rate = 0.0;
  EXPECT_THROW(tune(spec, mistuned(), data), InvalidInput);
  spec = TunerSpec{};
  spec.jobs = 0;
  EXPECT_THROW(spec.validate(), InvalidInput);
  spec = TunerSpec{};
  spec.tune_q = spec.tune_r = false;
  EXPECT_THROW(tune(spec, mistuned(), data), InvalidInput);
}
