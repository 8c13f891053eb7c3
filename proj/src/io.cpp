#include "proprio/io.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "proprio/errors.hpp"

namespace proprio {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput(fmt::format("cannot read {}", path.string()));
  return in;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, const fs::path& path, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw InvalidInput(fmt::format("{}:{}: '{}' is not a number", path.string(), line, s));
  return v;
}

// Reads a numeric CSV whose header must match `expected`; returns the data rows.
std::vector<std::vector<double>> read_table(const fs::path& path,
                                            const std::vector<std::string>& expected_prefixes,
                                            Eigen::Index& channels) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput(fmt::format("{} is empty", path.string()));
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  const auto groups = static_cast<Eigen::Index>(expected_prefixes.size());
  if (header.size() < 1 + expected_prefixes.size() || (header.size() - 1) % expected_prefixes.size())
    throw InvalidInput(fmt::format("{}: unexpected column count {}", path.string(), header.size()));
  channels = static_cast<Eigen::Index>(header.size() - 1) / groups;
  if (header[0] != "t") throw InvalidInput(fmt::format("{}: first column must be t", path.string()));
  for (Eigen::Index g = 0; g < groups; ++g)
    for (Eigen::Index k = 0; k < channels; ++k) {
      const auto want = fmt::format("{}{}", expected_prefixes[static_cast<std::size_t>(g)], k + 1);
      const auto& got = header[static_cast<std::size_t>(1 + g * channels + k)];
      if (got != want)
        throw InvalidInput(fmt::format("{}: expected column '{}', found '{}'", path.string(), want, got));
    }

  std::vector<std::vector<double>> rows;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != header.size())
      throw InvalidInput(fmt::format("{}:{}: expected {} fields, got {}", path.string(), number,
                                     header.size(), fields.size()));
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_double(f, path, number));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_header(std::ostream& out, const std::vector<std::string>& prefixes, Eigen::Index n) {
  out << "t";
  for (const auto& p : prefixes)
    for (Eigen::Index k = 0; k < n; ++k) out << ',' << p << k + 1;
  out << '\n';
}

void write_shape_rows(std::ostream& out, double t, const Eigen::VectorXd& thetas,
                      const Points2<double>& pts) {
  out << format_double(t);
  for (Eigen::Index k = 0; k < thetas.size(); ++k) out << ',' << format_double(thetas(k));
  for (Eigen::Index r = 0; r < 2; ++r)
    for (Eigen::Index k = 0; k < pts.cols(); ++k) out << ',' << format_double(pts(r, k));
  out << '\n';
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* name) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw InvalidInput(fmt::format("matrix {} declares {}x{} but holds {} values", name, rows, cols,
                                   data.size()));
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)].get<double>();
  return m;
}

template <typename T>
void read_if(const json& j, const char* key, T& value) {
  if (j.contains(key)) value = j.at(key).get<T>();
}

void read_deg(const json& j, const char* key, double& rad) {
  if (j.contains(key)) rad = j.at(key).get<double>() * kDeg;
}

json result_json(const MethodResult& r) {
  json j{{"scenario", r.scenario}, {"method", std::string(to_string(r.method))}};
  if (!r.ok()) {
    j["failure"] = r.failure;
    return j;
  }
  j["frames"] = r.errors.size();
  j["skipped"] = r.frames.skipped;
  j["rmse_mm"] = r.rmse;
  j["rmse_pct"] = r.rmse_pct;
  j["mae_mm"] = r.mae;
  j["q1_mm"] = r.q1;
  j["median_mm"] = r.median;
  j["q3_mm"] = r.q3;
  j["p75_mm"] = vector_json(r.p75);
  j["orientation_rmse_deg"] = r.orientation_rmse / kDeg;
  return j;
}

std::vector<std::string> scenario_order(std::span<const MethodResult> rows) {
  std::vector<std::string> order;
  for (const auto& r : rows)
    if (std::find(order.begin(), order.end(), r.scenario) == order.end()) order.push_back(r.scenario);
  return order;
}

}  // namespace

std::string format_double(double value) { return fmt::format("{}", value); }

void write_sensor_csv(const fs::path& path, std::span<const SensorFrame> frames) {
  auto out = open_out(path);
  const Eigen::Index n = frames.empty() ? 0 : frames.front().imu_yaw.size();
  write_header(out, {"imu_yaw_", "bendA_v_", "bendB_v_"}, n);
  for (const auto& f : frames) {
    if (f.imu_yaw.size() != n || f.bend_voltage.cols() != n)
      throw InvalidInput("sensor frames have inconsistent channel counts");
    out << format_double(f.t);
    for (Eigen::Index k = 0; k < n; ++k) out << ',' << format_double(f.imu_yaw(k));
    for (Eigen::Index r = 0; r < 2; ++r)
      for (Eigen::Index k = 0; k < n; ++k) out << ',' << format_double(f.bend_voltage(r, k));
    out << '\n';
  }
}

std::vector<SensorFrame> read_sensor_csv(const fs::path& path) {
  Eigen::Index n = 0;
  const auto rows = read_table(path, {"imu_yaw_", "bendA_v_", "bendB_v_"}, n);
  std::vector<SensorFrame> frames;
  frames.reserve(rows.size());
  for (const auto& row : rows) {
    SensorFrame f;
    f.t = row[0];
    f.imu_yaw.resize(n);
    f.bend_voltage.resize(2, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      f.imu_yaw(k) = row[static_cast<std::size_t>(1 + k)];
      f.bend_voltage(0, k) = row[static_cast<std::size_t>(1 + n + k)];
      f.bend_voltage(1, k) = row[static_cast<std::size_t>(1 + 2 * n + k)];
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

void write_truth_csv(const fs::path& path, std::span<const GroundTruthFrame> truth) {
  auto out = open_out(path);
  const Eigen::Index n = truth.empty() ? 0 : truth.front().thetas.size();
  write_header(out, {"theta_", "x_", "y_"}, n);
  for (const auto& f : truth) write_shape_rows(out, f.t, f.thetas, f.world_points);
}

std::vector<GroundTruthFrame> read_truth_csv(const fs::path& path) {
  Eigen::Index n = 0;
  const auto rows = read_table(path, {"theta_", "x_", "y_"}, n);
  std::vector<GroundTruthFrame> truth;
  truth.reserve(rows.size());
  for (const auto& row : rows) {
    GroundTruthFrame f;
    f.t = row[0];
    f.thetas.resize(n);
    f.proximal_fraction = Eigen::VectorXd::Constant(n, 0.5);
    f.world_points.resize(2, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      f.thetas(k) = row[static_cast<std::size_t>(1 + k)];
      f.world_points(0, k) = row[static_cast<std::size_t>(1 + n + k)];
      f.world_points(1, k) = row[static_cast<std::size_t>(1 + 2 * n + k)];
    }
    truth.push_back(std::move(f));
  }
  return truth;
}

void write_estimate_csv(const fs::path& path, std::span<const RobotShapeEstimate> estimates) {
  auto out = open_out(path);
  const Eigen::Index n = estimates.empty() ? 0 : estimates.front().thetas.size();
  write_header(out, {"theta_", "x_", "y_"}, n);
  for (const auto& e : estimates) write_shape_rows(out, e.t, e.thetas, e.world_points);
}

json to_json(const RobotGeometry& robot) {
  json segs = json::array();
  for (const auto& s : robot.segments)
    segs.push_back({{"arc_length_mm", s.arc_length},
                    {"offset_length_mm", s.offset_length},
                    {"offset_follows_bend", s.offset_follows_bend}});
  return {{"segments", segs}};
}

RobotGeometry robot_from_json(const json& j) {
  RobotGeometry robot;
  const auto& segs = j.at("segments");
  if (!segs.is_array() || segs.empty()) throw InvalidInput("robot needs a non-empty segments array");
  int index = 1;
  for (const auto& s : segs) {
    SegmentGeometry<double> g;
    g.arc_length = s.at("arc_length_mm").get<double>();
    g.offset_length = s.at("offset_length_mm").get<double>();
    g.offset_follows_bend = s.value("offset_follows_bend", index % 2 == 1);
    g.index = index++;
    robot.segments.push_back(g);
  }
  robot.validate();
  return robot;
}

json to_json(const CalibrationSet& maps) {
  json a = json::array();
  for (const auto& m : maps)
    a.push_back({{"a", m.a}, {"b", m.b}, {"c", m.c}, {"v_min", m.v_min}, {"v_max", m.v_max},
                 {"fit_rmse", m.fit_rmse}});
  return a;
}

CalibrationSet calibration_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw InvalidInput("calibration must be a non-empty array");
  CalibrationSet maps;
  for (const auto& e : j) {
    CalibrationMap m;
    m.a = e.at("a").get<double>();
    m.b = e.at("b").get<double>();
    m.c = e.at("c").get<double>();
    m.v_min = e.at("v_min").get<double>();
    m.v_max = e.at("v_max").get<double>();
    m.fit_rmse = e.value("fit_rmse", 0.0);
    if (!(m.v_max > m.v_min)) throw InvalidInput("calibration range must have v_max > v_min");
    if (!m.is_monotonic()) throw BijectivityError("calibration map is not monotonic over its range");
    maps.push_back(m);
  }
  return maps;
}

json to_json(const KalmanConfig<double>& cfg) {
  return {{"state_dim", cfg.state_dim()},
          {"measurement_dim", cfg.measurement_dim()},
          {"A", matrix_json(cfg.A)},
          {"B", matrix_json(cfg.B)},
          {"H", matrix_json(cfg.H)},
          {"Q", matrix_json(cfg.Q)},
          {"R", matrix_json(cfg.R)},
          {"P0", matrix_json(cfg.P0)}};
}

KalmanConfig<double> kalman_config_from_json(const json& j) {
  KalmanConfig<double> cfg;
  cfg.A = matrix_from_json(j.at("A"), "A");
  cfg.B = matrix_from_json(j.at("B"), "B");
  cfg.H = matrix_from_json(j.at("H"), "H");
  cfg.Q = matrix_from_json(j.at("Q"), "Q");
  cfg.R = matrix_from_json(j.at("R"), "R");
  cfg.P0 = matrix_from_json(j.at("P0"), "P0");
  if (j.contains("state_dim") && j.at("state_dim").get<Eigen::Index>() != cfg.state_dim())
    throw InvalidInput("state_dim does not match A");
  if (j.contains("measurement_dim") && j.at("measurement_dim").get<Eigen::Index>() != cfg.measurement_dim())
    throw InvalidInput("measurement_dim does not match H");
  cfg.validate();
  return cfg;
}

json to_json(const FusionConfigs& configs) {
  return {{"orientation", to_json(configs.orient)}, {"coordinates", to_json(configs.coord)}};
}

FusionConfigs fusion_configs_from_json(const json& j) {
  return {kalman_config_from_json(j.at("orientation")), kalman_config_from_json(j.at("coordinates"))};
}

json to_json(const FusionParams& p) {
  return {{"q_orient", vector_json(p.q_orient)},
          {"r_bend_orient", vector_json(p.r_bend_orient)},
          {"r_imu_orient", vector_json(p.r_imu_orient)},
          {"q_coord", vector_json(p.q_coord)},
          {"r_bend_coord", vector_json(p.r_bend_coord)},
          {"r_imu_coord", vector_json(p.r_imu_coord)},
          {"h_bend_orient", p.h_bend_orient},
          {"h_imu_orient", p.h_imu_orient},
          {"h_bend_coord", p.h_bend_coord},
          {"h_imu_coord", p.h_imu_coord}};
}

json to_json(const TunerReport& report) {
  json trace = json::array();
  for (const auto& it : report.trace)
    trace.push_back({{"iteration", it.iteration},
                     {"objective", it.objective.value},
                     {"position_rmse_mm", it.objective.position_rmse},
                     {"orientation_rmse_deg", it.objective.orientation_rmse / kDeg},
                     {"step", it.step},
                     {"backtracks", it.backtracks},
                     {"params", to_json(it.params)}});
  return {{"converged", report.converged},
          {"stop_reason", report.stop_reason},
          {"evaluations", report.evaluations},
          {"trace", trace},
          {"configs", to_json(report.configs)}};
}

json to_json(const ExperimentConfig& c) {
  const auto& imu = c.sim.imu;
  const auto& bend = c.sim.bend;
  const auto& tr = c.sim.trajectory;
  const auto& tu = c.tuner;
  json j{
      {"seed", c.seed},
      {"sample_rate_hz", c.sample_rate},
      {"scenario_duration_s", c.scenario_duration},
      {"training_duration_s", c.training_duration},
      {"robot", to_json(c.sim.robot)},
      {"imu",
       {{"yaw_white_noise_deg", imu.yaw_white_noise_std / kDeg},
        {"drift_rate_deg_per_sqrt_s", imu.drift_rate_std / kDeg},
        {"gyro_bias_std_deg_per_s", imu.gyro_bias_std / kDeg},
        {"acceleration_spike_gain_deg_per_mm_s2", imu.acceleration_spike_gain / kDeg}}},
      {"bend",
       {{"voltage_noise_std_v", bend.voltage_noise_std},
        {"hysteresis_width_deg", bend.hysteresis_width / kDeg},
        {"quantization_step_v", bend.quantization_step},
        {"nonuniform_curvature_gain", bend.nonuniform_curvature_gain},
        {"reference_voltage_v", bend.reference_voltage}}},
      {"trajectory",
       {{"sweep_amplitude_deg", tr.sweep_amplitude / kDeg},
        {"sweep_period_s", tr.sweep_period},
        {"phase_lag_rad", tr.phase_lag},
        {"modulation_depth", tr.modulation_depth},
        {"modulation_period_s", tr.modulation_period},
        {"force_rate_hz", tr.force_rate},
        {"force_duration_min_s", tr.force_duration_min},
        {"force_duration_max_s", tr.force_duration_max},
        {"force_amplitude_min_deg", tr.force_amplitude_min / kDeg},
        {"force_amplitude_max_deg", tr.force_amplitude_max / kDeg},
        {"contact_segment", tr.contact_segment},
        {"contact_onset", tr.contact_onset},
        {"contact_ramp", tr.contact_ramp},
        {"contact_angle_deg", tr.contact_angle / kDeg},
        {"wrap_angle_deg", tr.wrap_angle / kDeg},
        {"curvature_split", tr.curvature_split},
        {"training_sweep_fraction", tr.training_sweep_fraction},
        {"random_hold_s", tr.random_hold},
        {"random_amplitude_deg", tr.random_amplitude / kDeg}}},
      {"corrector",
       {{"window_size", c.corrector.window_size}, {"threshold_deg", c.corrector.threshold / kDeg}}},
      {"tuner",
       {{"learning_rate", tu.learning_rate},
        {"max_iters", tu.max_iters},
        {"convergence_tol", tu.convergence_tol},
        {"fd_step", tu.fd_step},
        {"max_backtracks", tu.max_backtracks},
        {"tune_q", tu.tune_q},
        {"tune_r", tu.tune_r},
        {"tune_h", tu.tune_h},
        {"per_entry", tu.per_entry},
        {"tune_orient", tu.tune_orient},
        {"tune_coord", tu.tune_coord},
        {"orientation_weight", tu.orientation_weight},
        {"variance_floor", tu.variance_floor}}},
  };
  if (!c.sim.sensors.empty()) j["sensors"] = to_json(c.sim.sensors);
  return j;
}

ExperimentConfig experiment_config_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("config must be a JSON object");
  ExperimentConfig c;
  try {
    read_if(j, "seed", c.seed);
    read_if(j, "sample_rate_hz", c.sample_rate);
    read_if(j, "scenario_duration_s", c.scenario_duration);
    read_if(j, "training_duration_s", c.training_duration);
    if (j.contains("robot")) c.sim.robot = robot_from_json(j.at("robot"));
    if (j.contains("imu")) {
      const auto& s = j.at("imu");
      auto& m = c.sim.imu;
      read_deg(s, "yaw_white_noise_deg", m.yaw_white_noise_std);
      read_deg(s, "drift_rate_deg_per_sqrt_s", m.drift_rate_std);
      read_deg(s, "gyro_bias_std_deg_per_s", m.gyro_bias_std);
      read_deg(s, "acceleration_spike_gain_deg_per_mm_s2", m.acceleration_spike_gain);
    }
    if (j.contains("bend")) {
      const auto& s = j.at("bend");
      auto& m = c.sim.bend;
      read_if(s, "voltage_noise_std_v", m.voltage_noise_std);
      read_deg(s, "hysteresis_width_deg", m.hysteresis_width);
      read_if(s, "quantization_step_v", m.quantization_step);
      read_if(s, "nonuniform_curvature_gain", m.nonuniform_curvature_gain);
      read_if(s, "reference_voltage_v", m.reference_voltage);
    }
    if (j.contains("trajectory")) {
      const auto& s = j.at("trajectory");
      auto& t = c.sim.trajectory;
      read_deg(s, "sweep_amplitude_deg", t.sweep_amplitude);
      read_if(s, "sweep_period_s", t.sweep_period);
      read_if(s, "phase_lag_rad", t.phase_lag);
      read_if(s, "modulation_depth", t.modulation_depth);
      read_if(s, "modulation_period_s", t.modulation_period);
      read_if(s, "force_rate_hz", t.force_rate);
      read_if(s, "force_duration_min_s", t.force_duration_min);
      read_if(s, "force_duration_max_s", t.force_duration_max);
      read_deg(s, "force_amplitude_min_deg", t.force_amplitude_min);
      read_deg(s, "force_amplitude_max_deg", t.force_amplitude_max);
      read_if(s, "contact_segment", t.contact_segment);
      read_if(s, "contact_onset", t.contact_onset);
      read_if(s, "contact_ramp", t.contact_ramp);
      read_deg(s, "contact_angle_deg", t.contact_angle);
      read_deg(s, "wrap_angle_deg", t.wrap_angle);
      read_if(s, "curvature_split", t.curvature_split);
      read_if(s, "training_sweep_fraction", t.training_sweep_fraction);
      read_if(s, "random_hold_s", t.random_hold);
      read_deg(s, "random_amplitude_deg", t.random_amplitude);
    }
    if (j.contains("sensors")) c.sim.sensors = calibration_from_json(j.at("sensors"));
    if (j.contains("corrector")) {
      const auto& s = j.at("corrector");
      read_if(s, "window_size", c.corrector.window_size);
      read_deg(s, "threshold_deg", c.corrector.threshold);
    }
    if (j.contains("tuner")) {
      const auto& s = j.at("tuner");
      auto& t = c.tuner;
      read_if(s, "learning_rate", t.learning_rate);
      read_if(s, "max_iters", t.max_iters);
      read_if(s, "convergence_tol", t.convergence_tol);
      read_if(s, "fd_step", t.fd_step);
      read_if(s, "max_backtracks", t.max_backtracks);
      read_if(s, "tune_q", t.tune_q);
      read_if(s, "tune_r", t.tune_r);
      read_if(s, "tune_h", t.tune_h);
      read_if(s, "per_entry", t.per_entry);
      read_if(s, "tune_orient", t.tune_orient);
      read_if(s, "tune_coord", t.tune_coord);
      read_if(s, "orientation_weight", t.orientation_weight);
      read_if(s, "variance_floor", t.variance_floor);
    }
  } catch (const json::exception& e) {
    throw InvalidInput(fmt::format("bad config: {}", e.what()));
  }
  c.validate();
  return c;
}

json to_json(const ScenarioSummary& s) {
  json intervals = json::array();
  for (const auto& [a, b] : s.pcc_violation_intervals) intervals.push_back({a, b});
  return {{"scenario", std::string(to_string(s.kind))},
          {"seed", s.seed},
          {"frames", s.frames},
          {"saturated_frames", s.saturated_frames},
          {"bend_clamped_frames", s.bend_clamped_frames},
          {"pcc_violation_intervals", intervals}};
}

void write_results_csv(const fs::path& path, std::span<const MethodResult> rows) {
  auto out = open_out(path);
  out << "scenario,method,frames,rmse_mm,rmse_pct,mae_mm,q1_mm,median_mm,q3_mm,"
         "orientation_rmse_deg,failure\n";
  for (const auto& r : rows) {
    out << r.scenario << ',' << to_string(r.method) << ',' << r.errors.size();
    for (double v : {r.rmse, r.rmse_pct, r.mae, r.q1, r.median, r.q3, r.orientation_rmse / kDeg})
      out << ',' << (r.ok() ? format_double(v) : "");
    std::string failure = r.failure;
    std::replace(failure.begin(), failure.end(), ',', ';');
    std::replace(failure.begin(), failure.end(), '\n', ' ');
    out << ',' << failure << '\n';
  }
}

void write_table_csv(const fs::path& path, std::span<const MethodResult> rows) {
  auto out = open_out(path);
  const auto scenarios = scenario_order(rows);
  out << "method";
  for (const auto& s : scenarios) out << ',' << s << "_rmse_mm," << s << "_rmse_pct";
  out << '\n';
  for (Method m : kAllMethods) {
    out << to_string(m);
    for (const auto& s : scenarios) {
      const auto it = std::find_if(rows.begin(), rows.end(),
                                   [&](const MethodResult& r) { return r.method == m && r.scenario == s; });
      if (it == rows.end() || !it->ok()) {
        out << ",,";
      } else {
        out << ',' << format_double(it->rmse) << ',' << format_double(it->rmse_pct);
      }
    }
    out << '\n';
  }
}

void write_plot_csv(const fs::path& path, std::span<const MethodResult> rows) {
  auto out = open_out(path);
  out << "scenario,method,series,index,value\n";
  for (const auto& r : rows) {
    if (!r.ok()) continue;
    const auto method = to_string(r.method);
    for (Eigen::Index p = 0; p < r.p75.size(); ++p)
      out << r.scenario << ',' << method << ",p75," << p + 1 << ',' << format_double(r.p75(p)) << '\n';
    if (r.scenario == "union") continue;  // frames already listed per scenario
    for (std::size_t i = 0; i < r.errors.size(); ++i)
      out << r.scenario << ',' << method << ",ee_error," << i << ',' << format_double(r.errors[i]) << '\n';
  }
}

json to_json(std::span<const MethodResult> rows) {
  json a = json::array();
  for (const auto& r : rows) a.push_back(result_json(r));
  return a;
}

void write_drift_trace_csv(const fs::path& path, std::span<const DriftTracePoint> trace) {
  auto out = open_out(path);
  out << "t,truth_deg,imu_raw_deg,imu_corrected_deg,bend_deg,raw_error_deg,corrected_error_deg\n";
  for (const auto& p : trace) {
    out << format_double(p.t) << ',' << format_double(p.truth / kDeg) << ','
        << format_double(p.imu_raw / kDeg) << ',' << format_double(p.imu_corrected / kDeg) << ','
        << format_double(p.bend / kDeg) << ',' << format_double((p.imu_raw - p.truth) / kDeg) << ','
        << format_double((p.imu_corrected - p.truth) / kDeg) << '\n';
  }
}

json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidInput(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  std::string hex;
  hex.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

json make_manifest(const json& config, std::uint64_t seed, const std::string& command) {
  return {{"command", command},
          {"seed", seed},
          {"config_sha256", sha256_hex(config.dump())},
          {"modules",
           {{"pcc_kinematics", "1.0.0"},
            {"sensor_sim", "1.0.0"},
            {"calibration", "1.0.0"},
            {"drift_correction", "1.0.0"},
            {"kalman_fusion", "1.0.0"},
            {"tuner", "1.0.0"},
            {"evaluation", "1.0.0"},
            {"cli", "1.0.0"}}}};
}

}  // namespace proprio
