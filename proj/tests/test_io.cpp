#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "proprio/errors.hpp"
#include "proprio/io.hpp"

using namespace proprio;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("proprio_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

using Io = TempDir;

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 582.84, 1e300}) EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST_F(Io, SensorCsvRoundTrip) {
  const SimulationConfig cfg;
  const auto run = simulate({ScenarioKind::ExternalForce, 10.0, 10.0, 3}, cfg);
  write_sensor_csv(dir_ / "s.csv", run.sensors);
  const auto back = read_sensor_csv(dir_ / "s.csv");
  ASSERT_EQ(back.size(), run.sensors.size());
  for (std::size_t j = 0; j < back.size(); ++j) {
    EXPECT_EQ(back[j].t, run.sensors[j].t);
    EXPECT_EQ(back[j].imu_yaw, run.sensors[j].imu_yaw);
    EXPECT_EQ(back[j].bend_voltage, run.sensors[j].bend_voltage);
  }
  EXPECT_EQ(slurp(dir_ / "s.csv").substr(0, 12), "t,imu_yaw_1,");
}

TEST_F(Io, TruthCsvRoundTrip) {
  const SimulationConfig cfg;
  const auto run = simulate({ScenarioKind::FreeSwing, 10.0, 10.0, 3}, cfg);
  write_truth_csv(dir_ / "t.csv", run.truth);
  const auto back = read_truth_csv(dir_ / "t.csv");
  ASSERT_EQ(back.size(), run.truth.size());
  for (std::size_t j = 0; j < back.size(); ++j) {
    EXPECT_EQ(back[j].thetas, run.truth[j].thetas);
    EXPECT_EQ(back[j].world_points, run.truth[j].world_points);
  }
}

TEST_F(Io, CsvErrors) {
  EXPECT_THROW(read_sensor_csv(dir_ / "missing.csv"), InvalidInput);
  std::ofstream(dir_ / "bad.csv") << "t,foo_1\n0,1\n";
  EXPECT_THROW(read_sensor_csv(dir_ / "bad.csv"), InvalidInput);
  std::ofstream(dir_ / "short.csv") << "t,theta_1,x_1,y_1\n0,1,2\n";
  EXPECT_THROW(read_truth_csv(dir_ / "short.csv"), InvalidInput);
  std::ofstream(dir_ / "text.csv") << "t,theta_1,x_1,y_1\n0,abc,2,3\n";
  EXPECT_THROW(read_truth_csv(dir_ / "text.csv"), InvalidInput);
}

TEST(Json, RobotAndCalibration) {
  const auto robot = RobotGeometry::default_arm();
  const auto r = robot_from_json(to_json(robot));
  ASSERT_EQ(r.size(), robot.size());
  for (std::size_t k = 0; k < r.size(); ++k) {
    EXPECT_EQ(r.segments[k].arc_length, robot.segments[k].arc_length);
    EXPECT_EQ(r.segments[k].offset_follows_bend, robot.segments[k].offset_follows_bend);
  }
  const auto maps = default_sensor_characteristics(4, 9);
  const auto back = calibration_from_json(to_json(maps));
  ASSERT_EQ(back.size(), 4u);
  EXPECT_EQ(back[2].a, maps[2].a);
  EXPECT_EQ(back[2].v_max, maps[2].v_max);
  EXPECT_THROW(calibration_from_json(json::object()), InvalidInput);
}

TEST(Json, KalmanConfigRoundTrip) {
  const SimulationConfig cfg;
  const NoiseAssumptions noise{cfg.imu, cfg.bend, {}, cfg.trajectory, 10.0};
  auto p = default_fusion_params(cfg.robot, cfg.sensor_characteristics(), noise);
  p.h_imu_orient = 0.75;
  const auto configs = make_configs(p);
  const auto back = fusion_configs_from_json(json::parse(to_json(configs).dump()));
  EXPECT_EQ(back.orient.H, configs.orient.H);
  EXPECT_EQ(back.orient.R, configs.orient.R);
  EXPECT_EQ(back.coord.Q, configs.coord.Q);
  EXPECT_EQ(back.coord.P0, configs.coord.P0);
  EXPECT_EQ(back.coord.B.cols(), 0);

  auto broken = to_json(configs);
  broken["orientation"]["Q"]["rows"] = 5;
  EXPECT_THROW(fusion_configs_from_json(broken), InvalidInput);
}

TEST(Json, ExperimentConfigRoundTrip) {
  ExperimentConfig c;
  c.seed = 42;
  c.sim.imu.yaw_white_noise_std = 1.3 * kDeg;
  c.corrector.window_size = 55;
  c.tuner.per_entry = true;
  c.sim.trajectory.contact_segment = 2;
  const auto back = experiment_config_from_json(json::parse(to_json(c).dump()));
  EXPECT_EQ(back.seed, 42u);
  EXPECT_NEAR(back.sim.imu.yaw_white_noise_std, c.sim.imu.yaw_white_noise_std, 1e-15);
  EXPECT_EQ(back.corrector.window_size, 55u);
  EXPECT_TRUE(back.tuner.per_entry);
  EXPECT_EQ(back.sim.trajectory.contact_segment, 2);
  EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
}

TEST(Json, PartialConfigUsesDefaults) {
  const auto c = experiment_config_from_json(json::parse(R"({"seed": 7, "imu": {"yaw_white_noise_deg": 2}})"));
  EXPECT_EQ(c.seed, 7u);
  EXPECT_NEAR(c.sim.imu.yaw_white_noise_std, 2.0 * kDeg, 1e-15);
  EXPECT_EQ(c.sim.imu.drift_rate_std, ImuNoiseModel::defaults().drift_rate_std);
  EXPECT_EQ(c.scenario_duration, 900.0);
  EXPECT_THROW(experiment_config_from_json(json::parse(R"({"seed": "x"})")), InvalidInput);
  EXPECT_THROW(experiment_config_from_json(json::parse(R"({"sample_rate_hz": -1})")), InvalidInput);
  EXPECT_THROW(experiment_config_from_json(json::array()), InvalidInput);
}

TEST(Manifest, HashesConfig) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const json config = to_json(ExperimentConfig{});
  const auto m = make_manifest(config, 3, "reproduce");
  EXPECT_EQ(m["seed"], 3);
  EXPECT_EQ(m["config_sha256"], sha256_hex(config.dump()));
  EXPECT_EQ(m["modules"].size(), 8u);
  ExperimentConfig other;
  other.seed = 2;
  EXPECT_NE(make_manifest(to_json(other), 3, "reproduce")["config_sha256"], m["config_sha256"]);
}

TEST_F(Io, ResultFiles) {
  std::vector<MethodResult> rows;
  FrameErrors e;
  for (int j = 0; j < 5; ++j) {
    e.per_point.push_back(Eigen::VectorXd::Constant(2, 1.0 + j));
    e.orientation.push_back(0.01);
  }
  rows.push_back(summarize(Method::Fusion, "I", e, 100.0));
  rows.push_back(summarize(Method::Bend, "I", e, 100.0));
  MethodResult failed;
  failed.method = Method::ImuCorrected;
  failed.scenario = "I";
  failed.failure = "boom";
  rows.push_back(failed);

  write_results_csv(dir_ / "r.csv", rows);
  write_table_csv(dir_ / "t.csv", rows);
  write_plot_csv(dir_ / "p.csv", rows);
  const auto results = slurp(dir_ / "r.csv");
  EXPECT_EQ(results.substr(0, results.find('\n')),
            "scenario,method,frames,rmse_mm,rmse_pct,mae_mm,q1_mm,median_mm,q3_mm,orientation_rmse_deg,failure");
  EXPECT_NE(results.find("boom"), std::string::npos);
  EXPECT_NE(slurp(dir_ / "t.csv").find("I_rmse_mm"), std::string::npos);
  EXPECT_NE(slurp(dir_ / "p.csv").find("ee_error"), std::string::npos);

  const auto j = to_json(std::span<const MethodResult>(rows));
  ASSERT_EQ(j.size(), 3u);
  EXPECT_EQ(j[0]["method"], "Fusion");
  EXPECT_EQ(j[2]["failure"], "boom");

  write_json(dir_ / "x.json", j);
  EXPECT_EQ(read_json(dir_ / "x.json"), j);
  std::ofstream(dir_ / "bad.json") << "{";
  EXPECT_THROW(read_json(dir_ / "bad.json"), InvalidInput);
}
