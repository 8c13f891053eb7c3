#include "proprio/sensor_sim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>

#include <fmt/format.h>

#include "proprio/errors.hpp"

namespace proprio {

namespace {

// RNG stream identifiers.
constexpr std::uint64_t kTrajectoryStream = 1000;
constexpr std::uint64_t kImuRateStream = 10;
constexpr std::uint64_t kImuWalkStream = 11;
constexpr std::uint64_t kImuNoiseStream = 12;
constexpr std::uint64_t kBendNoiseStream = 20;
constexpr std::uint64_t kRigStream = 30;

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

double sign_or_zero(double x) { return (x > 0.0) - (x < 0.0); }

struct ForceEvent {
  double start;
  double duration;
  double amplitude;
  std::size_t segment;  // 0-based; the perturbation is shared with the next segment
};

// Periodic lateral sweep with a travelling-wave phase lag along the chain. Each
// segment contributes at most amplitude / N, so |sum| <= amplitude.
class Sweep {
 public:
  Sweep(const TrajectoryParams& params, std::size_t segments, std::mt19937_64& rng)
      : params_(params), segments_(segments) {
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    phase0_ = phase(rng);
    mod_phase0_ = phase(rng);
  }

  Eigen::VectorXd at(double t) const {
    const double omega = 2.0 * std::numbers::pi / params_.sweep_period;
    const double mod_omega = 2.0 * std::numbers::pi / params_.modulation_period;
    const double per_segment = params_.sweep_amplitude / static_cast<double>(segments_);
    Eigen::VectorXd thetas(static_cast<Eigen::Index>(segments_));
    for (std::size_t k = 0; k < segments_; ++k) {
      const double kd = static_cast<double>(k);
      const double modulation =
          1.0 - params_.modulation_depth * 0.5 * (1.0 + std::sin(mod_omega * t + mod_phase0_ + kd));
      thetas(static_cast<Eigen::Index>(k)) =
          per_segment * modulation * std::sin(omega * t + phase0_ - kd * params_.phase_lag);
    }
    return thetas;
  }

 private:
  const TrajectoryParams& params_;
  std::size_t segments_;
  double phase0_ = 0.0;
  double mod_phase0_ = 0.0;
};

std::vector<ForceEvent> draw_force_events(const TrajectoryParams& p, double duration,
                                          std::size_t segments, std::mt19937_64& rng) {
  std::vector<ForceEvent> events;
  if (p.force_rate <= 0.0) return events;
  std::exponential_distribution<double> gap(p.force_rate);
  std::uniform_real_distribution<double> dur(p.force_duration_min, p.force_duration_max);
  std::uniform_real_distribution<double> amp(p.force_amplitude_min, p.force_amplitude_max);
  std::uniform_int_distribution<std::size_t> seg(0, segments - 1);
  std::bernoulli_distribution positive(0.5);
  for (double t = gap(rng); t < duration; t += gap(rng)) {
    ForceEvent e{t, dur(rng), amp(rng), seg(rng)};
    if (!positive(rng)) e.amplitude = -e.amplitude;
    events.push_back(e);
  }
  return events;
}

// Smoothly blended random per-segment targets, starting from `start`.
class RandomCurvature {
 public:
  RandomCurvature(const TrajectoryParams& params, Eigen::VectorXd start, double duration,
                  std::mt19937_64& rng)
      : hold_(params.random_hold) {
    std::uniform_real_distribution<double> target(-params.random_amplitude, params.random_amplitude);
    const auto count = static_cast<std::size_t>(std::ceil(duration / hold_)) + 2;
    targets_.push_back(std::move(start));
    for (std::size_t i = 1; i < count; ++i) {
      Eigen::VectorXd next(targets_.front().size());
      for (Eigen::Index k = 0; k < next.size(); ++k) next(k) = target(rng);
      targets_.push_back(next);
    }
  }

  Eigen::VectorXd at(double t) const {
    const double u = std::max(0.0, t) / hold_;
    const auto i = std::min(static_cast<std::size_t>(u), targets_.size() - 2);
    const double w = 0.5 - 0.5 * std::cos(std::numbers::pi * std::clamp(u - static_cast<double>(i), 0.0, 1.0));
    return (1.0 - w) * targets_[i] + w * targets_[i + 1];
  }

 private:
  double hold_;
  std::vector<Eigen::VectorXd> targets_;
};

}  // namespace

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::FreeSwing: return "I";
    case ScenarioKind::ExternalForce: return "II";
    case ScenarioKind::Obstacle: return "III";
    case ScenarioKind::Training: return "train";
  }
  return "?";
}

ScenarioKind parse_scenario(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "i" || lower == "1") return ScenarioKind::FreeSwing;
  if (lower == "ii" || lower == "2") return ScenarioKind::ExternalForce;
  if (lower == "iii" || lower == "3") return ScenarioKind::Obstacle;
  if (lower == "train" || lower == "training") return ScenarioKind::Training;
  throw InvalidInput(fmt::format("unknown scenario '{}' (expected I, II, III or train)", name));
}

void ScenarioSpec::validate() const {
  if (!(duration > 0.0) || !std::isfinite(duration)) throw InvalidInput("scenario duration must be > 0");
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate))
    throw InvalidInput("scenario sample_rate must be > 0");
}

std::size_t ScenarioSpec::frame_count() const {
  return static_cast<std::size_t>(std::llround(duration * sample_rate));
}

Vector2<double> split_segment_endpoint(const SegmentGeometry<double>& geom, double theta,
                                       double proximal_fraction) {
  if (proximal_fraction == 0.5) return segment_endpoint(geom, theta);
  SegmentGeometry<double> half = geom;
  half.arc_length = 0.5 * geom.arc_length;
  const double proximal = proximal_fraction * theta;
  const double distal = theta - proximal;
  return curvature_endpoint(half, proximal) +
         segment_rotation(proximal) * curvature_endpoint(half, distal) + offset_endpoint(geom, theta);
}

Eigen::VectorXd absolute_orientations(const Eigen::VectorXd& thetas) {
  Eigen::VectorXd out(thetas.size());
  double sum = 0.0;
  for (Eigen::Index k = 0; k < thetas.size(); ++k) out(k) = (sum += thetas(k));
  return out;
}

std::vector<GroundTruthFrame> generate_trajectory(const ScenarioSpec& spec,
                                                  const RobotGeometry& robot,
                                                  const TrajectoryParams& params) {
  spec.validate();
  robot.validate();
  const std::size_t n = robot.size();
  const auto kind_tag = static_cast<std::uint64_t>(spec.kind);
  auto rng = make_rng(spec.seed, kTrajectoryStream + kind_tag);

  const Sweep sweep(params, n, rng);
  std::vector<ForceEvent> events;
  if (spec.kind == ScenarioKind::ExternalForce)
    events = draw_force_events(params, spec.duration, n, rng);

  const double sweep_end = spec.duration * params.training_sweep_fraction;
  std::optional<RandomCurvature> random_part;
  if (spec.kind == ScenarioKind::Training)
    random_part.emplace(params, sweep.at(sweep_end), spec.duration - sweep_end, rng);

  const auto contact = static_cast<Eigen::Index>(params.contact_segment - 1);
  if (spec.kind == ScenarioKind::Obstacle && (contact < 0 || contact >= static_cast<Eigen::Index>(n)))
    throw InvalidInput("contact_segment out of range");

  const std::size_t frames = spec.frame_count();
  std::vector<GroundTruthFrame> out;
  out.reserve(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    GroundTruthFrame f;
    f.t = static_cast<double>(i) / spec.sample_rate;
    f.proximal_fraction = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 0.5);

    if (spec.kind == ScenarioKind::Training && f.t >= sweep_end) {
      f.thetas = random_part->at(f.t - sweep_end);
    } else {
      f.thetas = sweep.at(f.t);
    }

    if (spec.kind == ScenarioKind::ExternalForce) {
      for (const auto& e : events) {
        const double tau = f.t - e.start;
        if (tau < 0.0 || tau > e.duration) continue;
        const double push = e.amplitude * std::sin(std::numbers::pi * tau / e.duration);
        const auto j = static_cast<Eigen::Index>(e.segment);
        if (j + 1 < static_cast<Eigen::Index>(n)) {
          f.thetas(j) += 0.5 * push;
          f.thetas(j + 1) += 0.5 * push;
        } else {
          f.thetas(j) += push;
        }
        f.force_active = true;
      }
    }

    if (spec.kind == ScenarioKind::Obstacle) {
      const double total = f.thetas.sum();
      const double side = sign_or_zero(total);
      const double depth = smoothstep((std::abs(total) / params.sweep_amplitude - params.contact_onset) /
                                      params.contact_ramp);
      f.contact_depth = depth;
      if (depth > 0.0) {
        f.thetas(contact) = (1.0 - depth) * f.thetas(contact) + depth * side * params.contact_angle;
        for (Eigen::Index k = contact + 1; k < f.thetas.size(); ++k)
          f.thetas(k) += depth * side * params.wrap_angle;
        for (Eigen::Index k = contact; k < std::min<Eigen::Index>(contact + 2, f.thetas.size()); ++k)
          f.proximal_fraction(k) = 0.5 + depth * params.curvature_split;
        f.pcc_violation = params.curvature_split != 0.0;
      }
    }

    Points2<double> local(2, static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      validate_bend_angle(f.thetas(kk));
      local.col(kk) = split_segment_endpoint(robot.segments[k], f.thetas(kk), f.proximal_fraction(kk));
    }
    f.world_points = compose_world(local, f.thetas);
    out.push_back(std::move(f));
  }
  return out;
}

void ImuNoiseModel::validate() const {
  for (double v : {yaw_white_noise_std, drift_rate_std, gyro_bias_std, acceleration_spike_gain})
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("IMU noise parameters must be >= 0");
}

ImuNoiseModel ImuNoiseModel::defaults() {
  ImuNoiseModel m;
  m.yaw_white_noise_std = 0.8 * kDeg;
  m.drift_rate_std = 0.05 * kDeg;
  // Median |rate| * 900 s = 45 deg for a zero-mean Gaussian rate (median |N(0,1)| = 0.6745).
  m.gyro_bias_std = 45.0 * kDeg / (0.6744897501960817 * 900.0);
  m.acceleration_spike_gain = 2.5e-4 * kDeg;
  return m;
}

void BendNoiseModel::validate() const {
  for (double v : {voltage_noise_std, hysteresis_width, quantization_step, nonuniform_curvature_gain})
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("bend noise parameters must be >= 0");
  if (!(reference_voltage > 0.0)) throw InvalidInput("reference_voltage must be > 0");
}

BendNoiseModel BendNoiseModel::defaults() {
  BendNoiseModel m;
  m.voltage_noise_std = 0.05;
  m.hysteresis_width = 2.0 * kDeg;
  m.quantization_step = 3.3 / 4096.0;
  m.nonuniform_curvature_gain = 0.5;
  return m;
}

std::vector<Eigen::VectorXd> synthesize_imu(std::span<const GroundTruthFrame> truth,
                                            const ImuNoiseModel& model, std::uint64_t seed) {
  model.validate();
  std::vector<Eigen::VectorXd> yaw;
  if (truth.empty()) return yaw;
  const Eigen::Index n = truth.front().thetas.size();

  std::normal_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd rate(n);
  std::vector<std::mt19937_64> walk_rng;
  std::vector<std::mt19937_64> noise_rng;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto rate_rng = make_rng(seed, kImuRateStream, static_cast<std::uint64_t>(i));
    rate(i) = model.gyro_bias_std * unit(rate_rng);
    walk_rng.push_back(make_rng(seed, kImuWalkStream, static_cast<std::uint64_t>(i)));
    noise_rng.push_back(make_rng(seed, kImuNoiseStream, static_cast<std::uint64_t>(i)));
  }

  Eigen::VectorXd walk = Eigen::VectorXd::Zero(n);
  const double t0 = truth.front().t;
  yaw.reserve(truth.size());
  for (std::size_t j = 0; j < truth.size(); ++j) {
    const auto& f = truth[j];
    Eigen::VectorXd y = absolute_orientations(f.thetas);
    if (j > 0) {
      const double dt = f.t - truth[j - 1].t;
      for (Eigen::Index i = 0; i < n; ++i)
        walk(i) += model.drift_rate_std * std::sqrt(std::max(dt, 0.0)) *
                   unit(walk_rng[static_cast<std::size_t>(i)]);
    }
    const bool interior = j > 0 && j + 1 < truth.size();
    for (Eigen::Index i = 0; i < n; ++i) {
      double spike = 0.0;
      if (interior && model.acceleration_spike_gain > 0.0) {
        const double dt_prev = f.t - truth[j - 1].t;
        const double dt_next = truth[j + 1].t - f.t;
        const Vector2<double> accel =
            2.0 *
            ((truth[j + 1].world_points.col(i) - f.world_points.col(i)) / dt_next -
             (f.world_points.col(i) - truth[j - 1].world_points.col(i)) / dt_prev) /
            (dt_prev + dt_next);
        // Lateral axis of the sensing point's heading (sin y, cos y).
        const Vector2<double> lateral(std::cos(y(i)), -std::sin(y(i)));
        spike = model.acceleration_spike_gain * accel.dot(lateral);
      }
      const double noise =
          model.yaw_white_noise_std * unit(noise_rng[static_cast<std::size_t>(i)]);
      y(i) += rate(i) * (f.t - t0) + walk(i) + noise + spike;
    }
    yaw.push_back(std::move(y));
  }
  return yaw;
}

BendSynthesis synthesize_bend(std::span<const GroundTruthFrame> truth, const BendNoiseModel& model,
                              const CalibrationSet& sensors, std::uint64_t seed) {
  model.validate();
  BendSynthesis out;
  if (truth.empty()) return out;
  const Eigen::Index n = truth.front().thetas.size();
  if (static_cast<Eigen::Index>(sensors.size()) != n)
    throw InvalidInput(fmt::format("need {} sensor characteristics, got {}", n, sensors.size()));
  for (const auto& s : sensors)
    if (!s.is_monotonic()) throw BijectivityError("sensor characteristic is not invertible");

  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<std::mt19937_64> rng;
  for (Eigen::Index k = 0; k < 2 * n; ++k)
    rng.push_back(make_rng(seed, kBendNoiseStream, static_cast<std::uint64_t>(k)));

  Eigen::VectorXd direction = Eigen::VectorXd::Zero(n);
  out.voltages.reserve(truth.size());
  out.saturated.reserve(truth.size());
  for (std::size_t j = 0; j < truth.size(); ++j) {
    const auto& f = truth[j];
    Eigen::Matrix2Xd v(2, n);
    bool saturated = false;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double theta = f.thetas(k);
      if (j > 0) {
        const double s = sign_or_zero(theta - truth[j - 1].thetas(k));
        if (s != 0.0) direction(k) = s;
      }
      const double sensed =
          theta * (1.0 + model.nonuniform_curvature_gain * (2.0 * f.proximal_fraction(k) - 1.0)) -
          0.5 * model.hysteresis_width * direction(k);
      const auto clean = orientation_to_voltage(sensors[static_cast<std::size_t>(k)], sensed);
      saturated = saturated || clean.clamped;
      for (Eigen::Index r = 0; r < 2; ++r) {
        double volts = clean.voltage +
                       model.voltage_noise_std * unit(rng[static_cast<std::size_t>(2 * k + r)]);
        if (model.quantization_step > 0.0)
          volts = std::round(volts / model.quantization_step) * model.quantization_step;
        v(r, k) = std::clamp(volts, 0.0, model.reference_voltage);
      }
    }
    out.voltages.push_back(std::move(v));
    out.saturated.push_back(saturated);
  }
  return out;
}

CalibrationSet default_sensor_characteristics(std::size_t count, std::uint64_t rig_seed) {
  auto rng = make_rng(rig_seed, kRigStream);
  std::uniform_real_distribution<double> spread(-1.0, 1.0);
  CalibrationSet maps;
  for (std::size_t i = 0; i < count; ++i) {
    // theta = k (v - v0) + q (v - v0)^2 with k ~ 0.6 rad/V.
    const double k = 0.6 * (1.0 + 0.1 * spread(rng));
    const double q = 0.08 * k * spread(rng);
    const double v0 = 1.65 + 0.1 * spread(rng);
    CalibrationMap m;
    m.a = q;
    m.b = k - 2.0 * q * v0;
    m.c = q * v0 * v0 - k * v0;
    m.v_min = 0.2;
    m.v_max = 3.1;
    maps.push_back(m);
  }
  return maps;
}

SimulationConfig SimulationConfig::noiseless() const {
  SimulationConfig c = *this;
  c.imu = ImuNoiseModel{};
  const double vref = c.bend.reference_voltage;
  c.bend = BendNoiseModel{};
  c.bend.reference_voltage = vref;
  return c;
}

CalibrationSet SimulationConfig::sensor_characteristics() const {
  if (!sensors.empty()) return sensors;
  return default_sensor_characteristics(robot.size());
}

std::vector<std::pair<double, double>> ScenarioRun::pcc_violation_intervals() const {
  std::vector<std::pair<double, double>> intervals;
  bool open = false;
  for (const auto& f : truth) {
    if (f.pcc_violation && !open) {
      intervals.emplace_back(f.t, f.t);
      open = true;
    } else if (f.pcc_violation) {
      intervals.back().second = f.t;
    } else {
      open = false;
    }
  }
  return intervals;
}

ScenarioRun simulate(const ScenarioSpec& spec, const SimulationConfig& config) {
  ScenarioRun run;
  run.spec = spec;
  run.truth = generate_trajectory(spec, config.robot, config.trajectory);
  const auto yaw = synthesize_imu(run.truth, config.imu, spec.seed);
  const auto bend = synthesize_bend(run.truth, config.bend, config.sensor_characteristics(), spec.seed);
  run.sensors.reserve(run.truth.size());
  for (std::size_t j = 0; j < run.truth.size(); ++j) {
    run.sensors.push_back({run.truth[j].t, yaw[j], bend.voltages[j]});
    if (bend.saturated[j]) ++run.saturated_frames;
  }
  return run;
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t channel) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(stream), hi(stream), lo(channel), hi(channel)};
  return std::mt19937_64(seq);
}

}  // namespace proprio
