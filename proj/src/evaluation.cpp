#include "proprio/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "proprio/errors.hpp"

namespace proprio {

Eigen::VectorXd frame_error(const RobotShapeEstimate& estimate, const GroundTruthFrame& gt) {
  if (estimate.world_points.cols() != gt.world_points.cols())
    throw InvalidInput(fmt::format("estimate has {} points, ground truth {}",
                                   estimate.world_points.cols(), gt.world_points.cols()));
  return (estimate.world_points - gt.world_points).colwise().norm().transpose();
}

TimeJoin join_by_time(std::span<const double> estimate_t, std::span<const double> gt_t,
                      double tolerance) {
  TimeJoin join;
  std::size_t g = 0;
  for (std::size_t e = 0; e < estimate_t.size(); ++e) {
    const double t = estimate_t[e];
    while (g + 1 < gt_t.size() && std::abs(gt_t[g + 1] - t) <= std::abs(gt_t[g] - t)) ++g;
    if (!gt_t.empty() && std::abs(gt_t[g] - t) <= tolerance) {
      join.pairs.emplace_back(e, g);
    } else {
      ++join.skipped;
    }
  }
  return join;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidInput("percentile of an empty list");
  if (!(q >= 0.0 && q <= 100.0)) throw InvalidInput("percentile must be in [0, 100]");
  std::sort(values.begin(), values.end());
  const double rank = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (rank - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

FrameErrors compute_errors(std::span<const RobotShapeEstimate> estimates,
                           std::span<const GroundTruthFrame> truth, double sample_rate) {
  if (!(sample_rate > 0.0)) throw InvalidInput("sample_rate must be > 0");
  std::vector<double> et, gt;
  et.reserve(estimates.size());
  gt.reserve(truth.size());
  for (const auto& e : estimates) et.push_back(e.t);
  for (const auto& g : truth) gt.push_back(g.t);
  const auto join = join_by_time(et, gt, 0.5 / sample_rate);

  FrameErrors out;
  out.skipped = join.skipped;
  out.per_point.reserve(join.pairs.size());
  out.orientation.reserve(join.pairs.size());
  for (const auto& [e, g] : join.pairs) {
    out.per_point.push_back(frame_error(estimates[e], truth[g]));
    const Eigen::VectorXd d = estimates[e].thetas - truth[g].thetas;
    out.orientation.push_back(std::sqrt(d.squaredNorm() / static_cast<double>(d.size())));
  }
  return out;
}

MethodResult summarize(Method method, std::string scenario, const FrameErrors& errors,
                       double total_length) {
  if (errors.per_point.empty()) throw InvalidInput("no frames to summarize");
  if (!(total_length > 0.0)) throw InvalidInput("total_length must be > 0");
  MethodResult r;
  r.method = method;
  r.scenario = std::move(scenario);
  r.frames = errors;

  const Eigen::Index points = errors.per_point.front().size();
  r.errors.reserve(errors.per_point.size());
  double sq = 0.0, abs = 0.0, orient = 0.0;
  for (std::size_t j = 0; j < errors.per_point.size(); ++j) {
    const double e = errors.per_point[j](points - 1);
    r.errors.push_back(e);
    sq += e * e;
    abs += e;
    orient += errors.orientation[j] * errors.orientation[j];
  }
  const auto n = static_cast<double>(r.errors.size());
  r.rmse = std::sqrt(sq / n);
  r.mae = abs / n;
  r.rmse_pct = r.rmse / total_length * 100.0;
  r.orientation_rmse = std::sqrt(orient / n);
  r.q1 = percentile(r.errors, 25.0);
  r.median = percentile(r.errors, 50.0);
  r.q3 = percentile(r.errors, 75.0);

  r.p75.resize(points);
  std::vector<double> column(errors.per_point.size());
  for (Eigen::Index p = 0; p < points; ++p) {
    for (std::size_t j = 0; j < column.size(); ++j) column[j] = errors.per_point[j](p);
    r.p75(p) = percentile(column, 75.0);
  }
  return r;
}

std::vector<MethodResult> compare_methods(const ScenarioRun& run, const RobotGeometry& robot,
                                          const CalibrationSet& calibration,
                                          DriftCorrectorParams corrector,
                                          const FusionConfigs& configs) {
  const std::string scenario(to_string(run.spec.kind));
  const double length = robot.total_length();

  std::vector<FrameMeasurements> log;
  std::string preprocess_failure;
  try {
    log = preprocess(run.sensors, calibration, corrector);
  } catch (const Error& e) {
    preprocess_failure = e.what();
    // The raw-IMU path needs neither calibration nor drift correction.
    log.clear();
    for (const auto& f : run.sensors) {
      FrameMeasurements m;
      m.t = f.t;
      m.theta_imu_raw = relative_angles(f.imu_yaw);
      log.push_back(std::move(m));
    }
  }

  std::vector<MethodResult> rows;
  for (Method method : kAllMethods) {
    MethodResult r;
    try {
      if (!preprocess_failure.empty() && method != Method::ImuRaw) throw Error(preprocess_failure);
      const auto estimates = run_method(method, log, robot, configs);
      r = summarize(method, scenario, compute_errors(estimates, run.truth, run.spec.sample_rate),
                    length);
    } catch (const Error& e) {
      r = MethodResult{};
      r.method = method;
      r.scenario = scenario;
      r.rmse = r.rmse_pct = r.mae = r.q1 = r.median = r.q3 = r.orientation_rmse =
          std::numeric_limits<double>::quiet_NaN();
      r.failure = e.what();
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<MethodResult> union_rows(std::span<const MethodResult> rows, double total_length,
                                     std::string scenario) {
  std::vector<MethodResult> out;
  for (Method method : kAllMethods) {
    FrameErrors merged;
    std::string failure;
    bool present = false;
    for (const auto& r : rows) {
      if (r.method != method) continue;
      present = true;
      if (!r.ok()) {
        failure = r.failure;
        continue;
      }
      merged.per_point.insert(merged.per_point.end(), r.frames.per_point.begin(),
                              r.frames.per_point.end());
      merged.orientation.insert(merged.orientation.end(), r.frames.orientation.begin(),
                                r.frames.orientation.end());
      merged.skipped += r.frames.skipped;
    }
    if (!present) continue;
    if (!failure.empty() || merged.per_point.empty()) {
      MethodResult r;
      r.method = method;
      r.scenario = scenario;
      r.rmse = r.rmse_pct = r.mae = r.q1 = r.median = r.q3 = r.orientation_rmse =
          std::numeric_limits<double>::quiet_NaN();
      r.failure = failure.empty() ? "no frames" : failure;
      out.push_back(std::move(r));
      continue;
    }
    out.push_back(summarize(method, scenario, merged, total_length));
  }
  return out;
}

}  // namespace proprio
