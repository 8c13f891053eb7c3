// proprio: simulate, calibrate, tune, estimate, evaluate, reproduce.
//
// Exit codes: 0 ok, 1 runtime failure, 2 usage error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "proprio/errors.hpp"
#include "proprio/experiment.hpp"
#include "proprio/io.hpp"

namespace fs = std::filesystem;
using namespace proprio;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int jobs = 1;
};

void add_common(CLI::App* cmd, Common& c, bool out_required = true) {
  cmd->add_option("--config", c.config, "Run configuration JSON")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "RNG seed (overrides the config)");
  auto* out = cmd->add_option("--out", c.out, "Output path");
  if (out_required) out->required();
  cmd->add_option("--jobs", c.jobs, "Parallel objective evaluations")->check(CLI::PositiveNumber);
}

ExperimentConfig load_config(const Common& c) {
  ExperimentConfig cfg =
      c.config.empty() ? ExperimentConfig{} : experiment_config_from_json(read_json(c.config));
  if (c.seed) cfg.seed = *c.seed;
  cfg.tuner.jobs = c.jobs;
  cfg.validate();
  return cfg;
}

const CLI::Validator kScenario(
    [](std::string& value) -> std::string {
      try {
        parse_scenario(value);
        return {};
      } catch (const InvalidInput& e) {
        return e.what();
      }
    },
    "SCENARIO", "scenario");

const CLI::Validator kMethod(
    [](std::string& value) -> std::string {
      try {
        parse_method(value);
        return {};
      } catch (const InvalidInput& e) {
        return e.what();
      }
    },
    "METHOD", "method");

CalibrationSet load_calibration(const fs::path& path) {
  const json j = read_json(path);
  return calibration_from_json(j.is_object() ? j.at("maps") : j);
}

fs::path sibling(const std::string& path, const char* name) {
  return fs::path(path).parent_path() / name;
}

ScenarioRun load_run(const std::string& log, const std::string& truth, ScenarioKind kind) {
  ScenarioRun run;
  run.sensors = read_sensor_csv(log);
  run.truth = read_truth_csv(truth.empty() ? sibling(log, "truth.csv") : fs::path(truth));
  if (run.sensors.size() != run.truth.size())
    throw InvalidInput(fmt::format("{} sensor frames but {} ground-truth frames", run.sensors.size(),
                                   run.truth.size()));
  if (run.sensors.empty()) throw InvalidInput("log is empty");
  run.spec.kind = kind;
  run.spec.duration = run.sensors.back().t - run.sensors.front().t;
  if (run.sensors.size() > 1)
    run.spec.sample_rate = static_cast<double>(run.sensors.size() - 1) / run.spec.duration;
  return run;
}

void check_robot(const RobotGeometry& robot, const ScenarioRun& run) {
  if (static_cast<std::size_t>(run.truth.front().thetas.size()) != robot.size())
    throw InvalidInput(fmt::format("log has {} segments but the configured robot has {}",
                                   run.truth.front().thetas.size(), robot.size()));
}

void write_result_files(const fs::path& dir, const std::vector<MethodResult>& rows,
                        const json& manifest) {
  write_results_csv(dir / "results.csv", rows);
  write_table_csv(dir / "table.csv", rows);
  write_plot_csv(dir / "plot.csv", rows);
  write_json(dir / "results.json", {{"results", to_json(std::span<const MethodResult>(rows))},
                                    {"manifest", manifest}});
}

int cmd_simulate(const Common& c, const std::string& scenario, std::optional<double> duration) {
  const auto cfg = load_config(c);
  ScenarioSpec spec{parse_scenario(scenario), duration.value_or(cfg.scenario_duration),
                    cfg.sample_rate, cfg.seed};
  const auto run = simulate(spec, cfg.sim);
  const fs::path dir(c.out);
  write_sensor_csv(dir / "sensors.csv", run.sensors);
  write_truth_csv(dir / "truth.csv", run.truth);
  json intervals = json::array();
  for (const auto& [a, b] : run.pcc_violation_intervals()) intervals.push_back({a, b});
  const json config = to_json(cfg);
  write_json(dir / "metadata.json",
             {{"scenario", std::string(to_string(spec.kind))},
              {"seed", spec.seed},
              {"duration_s", spec.duration},
              {"sample_rate_hz", spec.sample_rate},
              {"frames", run.truth.size()},
              {"saturated_frames", run.saturated_frames},
              {"pcc_violation_intervals", intervals},
              {"config", config},
              {"manifest", make_manifest(config, cfg.seed, "simulate")}});
  fmt::print("simulated {} frames of scenario {} into {}\n", run.truth.size(), to_string(spec.kind),
             dir.string());
  return 0;
}

int cmd_calibrate(const Common& c, const std::string& train, const std::string& truth) {
  const auto cfg = load_config(c);
  const auto run = load_run(train, truth, ScenarioKind::Training);
  check_robot(cfg.sim.robot, run);
  const auto maps = calibrate_from_run(run);
  const json config = to_json(cfg);
  write_json(c.out, {{"maps", to_json(maps)}, {"manifest", make_manifest(config, cfg.seed, "calibrate")}});
  for (std::size_t k = 0; k < maps.size(); ++k)
    fmt::print("segment {}: fit RMSE {:.3f} deg\n", k + 1, maps[k].fit_rmse / kDeg);
  return 0;
}

int cmd_tune(const Common& c, const std::string& train, const std::string& truth,
             const std::string& calibration, std::optional<double> lr, std::optional<int> iters,
             std::optional<double> tol) {
  auto cfg = load_config(c);
  if (lr) cfg.tuner.learning_rate = *lr;
  if (iters) cfg.tuner.max_iters = *iters;
  if (tol) cfg.tuner.convergence_tol = *tol;
  cfg.validate();
  const auto run = load_run(train, truth, ScenarioKind::Training);
  check_robot(cfg.sim.robot, run);
  const auto maps = calibration.empty() ? calibrate_from_run(run) : load_calibration(calibration);
  const auto data = training_data(run, cfg.sim.robot, maps, cfg.corrector);
  const auto initial =
      make_configs(default_fusion_params(cfg.sim.robot, maps, noise_assumptions(cfg)));
  const auto report = tune(cfg.tuner, initial, data);

  const json config = to_json(cfg);
  const json manifest = make_manifest(config, cfg.seed, "tune");
  json out = to_json(report.configs);
  out["manifest"] = manifest;
  write_json(c.out, out);
  fs::path report_path(c.out);
  report_path.replace_extension(".report.json");
  json rep = to_json(report);
  rep["manifest"] = manifest;
  write_json(report_path, rep);
  fmt::print("objective {:.4f} -> {:.4f} after {} accepted steps ({})\n", report.initial().value,
             report.best().value, report.trace.size() - 1, report.stop_reason);
  return 0;
}

int cmd_estimate(const Common& c, const std::string& log, const std::string& calibration,
                 const std::string& configs_path, const std::string& method) {
  const auto cfg = load_config(c);
  const auto frames = read_sensor_csv(log);
  const auto maps = load_calibration(calibration);
  const auto m = parse_method(method);
  FusionConfigs configs = m == Method::Fusion
                              ? fusion_configs_from_json(read_json(configs_path))
                              : make_configs(default_fusion_params(cfg.sim.robot, maps, noise_assumptions(cfg)));
  const auto measurements = preprocess(frames, maps, cfg.corrector);
  const auto estimates = run_method(m, measurements, cfg.sim.robot, configs);
  write_estimate_csv(c.out, estimates);
  fs::path manifest_path(c.out);
  manifest_path.replace_extension(".manifest.json");
  write_json(manifest_path, make_manifest(to_json(cfg), cfg.seed, "estimate"));
  fmt::print("wrote {} estimates to {}\n", estimates.size(), c.out);
  return 0;
}

int cmd_evaluate(const Common& c, const std::string& log, const std::string& truth,
                 const std::string& calibration, const std::string& configs_path,
                 const std::string& scenario) {
  const auto cfg = load_config(c);
  const auto run = load_run(log, truth, parse_scenario(scenario));
  check_robot(cfg.sim.robot, run);
  const auto maps = load_calibration(calibration);
  const auto configs = fusion_configs_from_json(read_json(configs_path));
  const auto rows = compare_methods(run, cfg.sim.robot, maps, cfg.corrector, configs);
  write_result_files(c.out, rows, make_manifest(to_json(cfg), cfg.seed, "evaluate"));
  for (const auto& r : rows)
    fmt::print("{:>6} {:>6}  {}\n", r.scenario, to_string(r.method),
               r.ok() ? fmt::format("{:.2f} mm ({:.2f}%)", r.rmse, r.rmse_pct) : r.failure);
  return 0;
}

int cmd_reproduce(const Common& c, std::optional<double> duration) {
  auto cfg = load_config(c);
  if (duration) cfg.scenario_duration = *duration;
  cfg.validate();
  const auto result = reproduce(cfg);
  const fs::path dir(c.out);
  const json config = to_json(cfg);
  const json manifest = make_manifest(config, cfg.seed, "reproduce");

  write_json(dir / "config.json", config);
  write_json(dir / "manifest.json", manifest);
  write_json(dir / "calibration.json", {{"maps", to_json(result.model.calibration)}});
  write_json(dir / "configs.json", to_json(result.model.configs));
  write_json(dir / "tuner_report.json", to_json(result.model.report));
  write_result_files(dir, result.evaluation.rows, manifest);
  json scenarios = json::array();
  for (const auto& s : result.evaluation.scenarios) scenarios.push_back(to_json(s));
  write_json(dir / "scenarios.json", scenarios);
  write_drift_trace_csv(dir / "drift_trace.csv", result.trace);
  write_json(dir / "drift_summary.json",
             {{"segment", 1},
              {"window", cfg.corrector.window_size},
              {"t_end_s", result.trace.back().t},
              {"raw_error_deg", result.trace_final.raw / kDeg},
              {"corrected_error_deg", result.trace_final.corrected / kDeg}});

  fmt::print("{:<8}", "method");
  for (ScenarioKind k : kEvaluationScenarios) fmt::print("{:>18}", to_string(k));
  fmt::print("{:>18}\n", "union");
  for (Method m : kAllMethods) {
    fmt::print("{:<8}", to_string(m));
    for (const auto& r : result.evaluation.rows)
      if (r.method == m)
        fmt::print("{:>18}", r.ok() ? fmt::format("{:.2f} ({:.2f}%)", r.rmse, r.rmse_pct) : "failed");
    fmt::print("\n");
  }
  fmt::print("drift at t={:.0f} s: raw {:.2f} deg, corrected {:.2f} deg\n", result.trace.back().t,
             result.trace_final.raw / kDeg, result.trace_final.corrected / kDeg);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Soft-arm proprioception: bend/IMU fusion toolkit"};
  app.require_subcommand(1);

  Common common;
  std::string scenario = "I";
  std::optional<double> duration;
  std::string train, truth, calibration, configs, log, method = "fusion";
  std::optional<double> lr, tol;
  std::optional<int> iters;

  auto* sim = app.add_subcommand("simulate", "Generate a sensor log and its ground truth");
  add_common(sim, common);
  sim->add_option("--scenario", scenario, "I, II, III or train")->required()->check(kScenario);
  sim->add_option("--duration", duration, "Seconds")->check(CLI::PositiveNumber);

  auto* cal = app.add_subcommand("calibrate", "Fit voltage-to-angle maps from a training log");
  add_common(cal, common);
  cal->add_option("--train", train, "Sensor CSV")->required()->check(CLI::ExistingFile);
  cal->add_option("--truth", truth, "Ground-truth CSV (default: truth.csv next to --train)");

  auto* tun = app.add_subcommand("tune", "Tune the fusion filters on a training log");
  add_common(tun, common);
  tun->add_option("--train", train, "Sensor CSV")->required()->check(CLI::ExistingFile);
  tun->add_option("--truth", truth, "Ground-truth CSV (default: truth.csv next to --train)");
  tun->add_option("--calibration", calibration, "Calibration JSON (default: fit on --train)");
  tun->add_option("--lr", lr, "Initial step size")->check(CLI::PositiveNumber);
  tun->add_option("--max-iters", iters, "Iteration cap")->check(CLI::PositiveNumber);
  tun->add_option("--tol", tol, "Convergence tolerance")->check(CLI::NonNegativeNumber);

  auto* est = app.add_subcommand("estimate", "Estimate shapes from a sensor log");
  add_common(est, common);
  est->add_option("--log", log, "Sensor CSV")->required()->check(CLI::ExistingFile);
  est->add_option("--calibration", calibration, "Calibration JSON")->required()->check(CLI::ExistingFile);
  est->add_option("--configs", configs, "Fusion configs JSON")->check(CLI::ExistingFile);
  est->add_option("--method", method, "fusion, bend, imu_c or imu_o")->check(kMethod);

  auto* ev = app.add_subcommand("evaluate", "Compare the four methods on a log");
  add_common(ev, common);
  ev->add_option("--log", log, "Sensor CSV")->required()->check(CLI::ExistingFile);
  ev->add_option("--truth", truth, "Ground-truth CSV (default: truth.csv next to --log)");
  ev->add_option("--calibration", calibration, "Calibration JSON")->required()->check(CLI::ExistingFile);
  ev->add_option("--configs", configs, "Fusion configs JSON")->required()->check(CLI::ExistingFile);
  ev->add_option("--scenario", scenario, "Scenario label")->check(kScenario);

  auto* rep = app.add_subcommand("reproduce", "Train, run scenarios I-III and evaluate");
  add_common(rep, common);
  rep->add_option("--duration", duration, "Seconds per scenario")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(common, scenario, duration);
    if (*cal) return cmd_calibrate(common, train, truth);
    if (*tun) return cmd_tune(common, train, truth, calibration, lr, iters, tol);
    if (*est) {
      if (parse_method(method) == Method::Fusion && configs.empty()) {
        std::cerr << "--configs is required for the fusion method\n";
        return 2;
      }
      return cmd_estimate(common, log, calibration, configs, method);
    }
    if (*ev) return cmd_evaluate(common, log, truth, calibration, configs, scenario);
    if (*rep) return cmd_reproduce(common, duration);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
