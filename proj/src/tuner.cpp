#include "proprio/tuner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include <fmt/format.h>

#include "proprio/errors.hpp"

namespace proprio {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Accepted steps may grow up to this multiple of the learning rate.
constexpr double kMaxStepGrowth = 64.0;

// Variance blocks 0..5 are q/r_bend/r_imu for the orientation then the
// coordinate filter; gains 0..3 are h_bend/h_imu for the same two filters.
Eigen::VectorXd& block(FusionParams& p, int b) {
  switch (b) {
    case 0: return p.q_orient;
    case 1: return p.r_bend_orient;
    case 2: return p.r_imu_orient;
    case 3: return p.q_coord;
    case 4: return p.r_bend_coord;
    default: return p.r_imu_coord;
  }
}

double& gain(FusionParams& p, int g) {
  switch (g) {
    case 0: return p.h_bend_orient;
    case 1: return p.h_imu_orient;
    case 2: return p.h_bend_coord;
    default: return p.h_imu_coord;
  }
}

struct Slot {
  bool is_gain = false;
  int index = 0;             // block or gain number
  Eigen::Index entry = -1;   // -1: scales the whole block
};

// Maps an unconstrained parameter vector onto FusionParams. Variances are
// log-multipliers of the starting values; H gains are taken as is.
class Parameterization {
 public:
  Parameterization(const TunerSpec& spec, FusionParams base) : base_(std::move(base)), floor_(spec.variance_floor) {
    for (int b = 0; b < 6; ++b)
      for (Eigen::Index i = 0; i < block(base_, b).size(); ++i)
        block(base_, b)(i) = std::max(block(base_, b)(i), floor_);

    auto add_filter = [&](int offset) {
      for (int b = offset; b < offset + 3; ++b) {
        const bool is_q = b % 3 == 0;
        if ((is_q && !spec.tune_q) || (!is_q && !spec.tune_r)) continue;
        if (spec.per_entry) {
          for (Eigen::Index i = 0; i < block(base_, b).size(); ++i) slots_.push_back({false, b, i});
        } else {
          slots_.push_back({false, b, -1});
        }
      }
      if (spec.tune_h) {
        slots_.push_back({true, offset / 3 * 2, -1});
        slots_.push_back({true, offset / 3 * 2 + 1, -1});
      }
    };
    if (spec.tune_orient) add_filter(0);
    if (spec.tune_coord) add_filter(3);
    if (slots_.empty()) throw InvalidInput("tuner has no active parameters");

    lower_.resize(size());
    for (Eigen::Index s = 0; s < size(); ++s) {
      const Slot& slot = slots_[static_cast<std::size_t>(s)];
      if (slot.is_gain) {
        lower_(s) = -kInf;
      } else if (slot.entry >= 0) {
        lower_(s) = std::log(floor_ / block(base_, slot.index)(slot.entry));
      } else {
        lower_(s) = std::log(floor_ / block(base_, slot.index).minCoeff());
      }
    }
  }

  Eigen::Index size() const { return static_cast<Eigen::Index>(slots_.size()); }

  Eigen::VectorXd initial() const {
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(size());
    FusionParams base = base_;
    for (Eigen::Index s = 0; s < size(); ++s) {
      const Slot& slot = slots_[static_cast<std::size_t>(s)];
      if (slot.is_gain) theta(s) = gain(base, slot.index);
    }
    return project(theta);
  }

  Eigen::VectorXd project(Eigen::VectorXd theta) const { return theta.cwiseMax(lower_); }

  FusionParams apply(const Eigen::VectorXd& theta) const {
    FusionParams p = base_;
    for (Eigen::Index s = 0; s < size(); ++s) {
      const Slot& slot = slots_[static_cast<std::size_t>(s)];
      if (slot.is_gain) {
        gain(p, slot.index) = theta(s);
      } else if (slot.entry >= 0) {
        block(p, slot.index)(slot.entry) *= std::exp(theta(s));
      } else {
        block(p, slot.index) *= std::exp(theta(s));
      }
    }
    for (int b = 0; b < 6; ++b) block(p, b) = block(p, b).cwiseMax(floor_);
    return p;
  }

 private:
  FusionParams base_;
  double floor_;
  std::vector<Slot> slots_;
  Eigen::VectorXd lower_;
};

ObjectiveValue diverged() { return {kInf, kInf, kInf}; }

ObjectiveValue evaluate(const Parameterization& param, const Eigen::VectorXd& theta,
                        const TrainingData& data, double weight) {
  FusionConfigs configs;
  try {
    configs = make_configs(param.apply(theta));
  } catch (const Error&) {
    return diverged();
  }
  return objective(configs, data, weight);
}

std::vector<ObjectiveValue> evaluate_batch(const Parameterization& param,
                                           const std::vector<Eigen::VectorXd>& thetas,
                                           const TrainingData& data, double weight, int jobs) {
  std::vector<ObjectiveValue> out(thetas.size());
  const auto workers = static_cast<std::size_t>(std::clamp<int>(jobs, 1, static_cast<int>(thetas.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < thetas.size(); ++i) out[i] = evaluate(param, thetas[i], data, weight);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < thetas.size(); i = next++)
        out[i] = evaluate(param, thetas[i], data, weight);
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace

void TunerSpec::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidInput("learning_rate must be > 0");
  if (!(fd_step > 0.0)) throw InvalidInput("fd_step must be > 0");
  if (max_iters < 1) throw InvalidInput("max_iters must be >= 1");
  if (!(convergence_tol >= 0.0)) throw InvalidInput("convergence_tol must be >= 0");
  if (max_backtracks < 0) throw InvalidInput("max_backtracks must be >= 0");
  if (!(variance_floor > 0.0)) throw InvalidInput("variance_floor must be > 0");
  if (!(orientation_weight >= 0.0)) throw InvalidInput("orientation_weight must be >= 0");
  if (jobs < 1) throw InvalidInput("jobs must be >= 1");
}

void TrainingData::validate() const {
  robot.validate();
  if (measurements.empty()) throw InvalidInput("training log is empty");
  if (measurements.size() != truth.size())
    throw InvalidInput(fmt::format("training log has {} frames but {} ground-truth frames",
                                   measurements.size(), truth.size()));
}

ObjectiveValue objective(const FusionConfigs& configs, const TrainingData& data,
                         double orientation_weight) {
  data.validate();
  std::vector<RobotShapeEstimate> estimates;
  try {
    estimates = run_method(Method::Fusion, data.measurements, data.robot, configs);
  } catch (const Error&) {
    return diverged();
  }
  double pos = 0.0;
  double orient = 0.0;
  Eigen::Index angles = 0;
  for (std::size_t j = 0; j < estimates.size(); ++j) {
    const auto& est = estimates[j];
    const auto& gt = data.truth[j];
    const Eigen::Index last = est.world_points.cols() - 1;
    pos += (est.world_points.col(last) - gt.world_points.col(last)).squaredNorm();
    orient += (est.thetas - gt.thetas).squaredNorm();
    angles += est.thetas.size();
  }
  ObjectiveValue v;
  v.position_rmse = std::sqrt(pos / static_cast<double>(estimates.size()));
  v.orientation_rmse = std::sqrt(orient / static_cast<double>(angles));
  v.value = v.position_rmse + orientation_weight * v.orientation_rmse / kDeg;
  if (!std::isfinite(v.value)) return diverged();
  return v;
}

TunerReport tune(const TunerSpec& spec, const FusionConfigs& initial, const TrainingData& data) {
  spec.validate();
  data.validate();
  const Parameterization param(spec, params_from_configs(initial));

  TunerReport report;
  Eigen::VectorXd theta = param.initial();
  ObjectiveValue current = evaluate(param, theta, data, spec.orientation_weight);
  report.evaluations = 1;
  if (!std::isfinite(current.value))
    throw NumericalError("initial fusion configs diverge on the training log");
  report.trace.push_back({0, current, 0.0, 0, param.apply(theta)});

  double alpha = spec.learning_rate;
  report.stop_reason = "max_iters";
  for (int iter = 1; iter <= spec.max_iters; ++iter) {
    std::vector<Eigen::VectorXd> probes;
    std::vector<double> steps;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const double h = spec.fd_step * (1.0 + std::abs(theta(i)));
      Eigen::VectorXd plus = theta, minus = theta;
      plus(i) += h;
      minus(i) -= h;
      probes.push_back(std::move(plus));
      probes.push_back(std::move(minus));
      steps.push_back(h);
    }
    const auto values = evaluate_batch(param, probes, data, spec.orientation_weight, spec.jobs);
    report.evaluations += static_cast<int>(values.size());
    Eigen::VectorXd grad(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const auto k = static_cast<std::size_t>(2 * i);
      const double fp = values[k].value;
      const double fm = values[k + 1].value;
      // One-sided fallback when a probe crosses into divergence.
      if (std::isfinite(fp) && std::isfinite(fm)) {
        grad(i) = (fp - fm) / (2.0 * steps[static_cast<std::size_t>(i)]);
      } else if (std::isfinite(fp)) {
        grad(i) = (fp - current.value) / steps[static_cast<std::size_t>(i)];
      } else if (std::isfinite(fm)) {
        grad(i) = (current.value - fm) / steps[static_cast<std::size_t>(i)];
      } else {
        grad(i) = 0.0;
      }
    }
    if (grad.norm() == 0.0) {
      report.converged = true;
      report.stop_reason = "zero_gradient";
      break;
    }

    double step = iter == 1 ? spec.learning_rate
                            : std::min(2.0 * alpha, kMaxStepGrowth * spec.learning_rate);
    bool accepted = false;
    int backtracks = 0;
    for (; backtracks <= spec.max_backtracks; ++backtracks, step *= 0.5) {
      const Eigen::VectorXd candidate = param.project(theta - step * grad);
      const ObjectiveValue value = evaluate(param, candidate, data, spec.orientation_weight);
      ++report.evaluations;
      if (value.value < current.value) {
        const double improvement = current.value - value.value;
        theta = candidate;
        current = value;
        alpha = step;
        accepted = true;
        report.trace.push_back({iter, current, step, backtracks, param.apply(theta)});
        if (improvement < spec.convergence_tol) {
          report.converged = true;
          report.stop_reason = "tolerance";
        }
        break;
      }
    }
    if (!accepted) {
      // No descent at any tried step: within tolerance of a stationary point,
      // or a genuine stall.
      report.converged = false;
      report.stop_reason = "stalled";
      break;
    }
    if (report.converged) break;
  }
  report.configs = make_configs(report.trace.back().params);
  return report;
}

}  // namespace proprio
