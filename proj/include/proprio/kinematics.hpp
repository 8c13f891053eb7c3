#pragma once

// Planar piecewise-constant-curvature (PCC) kinematics.
//
// Each sensing segment is a constant-curvature arc of length `arc_length`
// followed by a rigid connector of length `offset_length`. In a segment's
// local frame the arc starts at the origin heading along +y; a positive bend
// angle curls the arc toward +x. The tip heading of segment k is therefore the
// +y axis rotated clockwise by theta_k, and segment_rotation() returns that
// frame-to-frame rotation.

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "proprio/errors.hpp"

namespace proprio {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
using Rotation2 = Eigen::Matrix<Scalar, 2, 2>;

/// 2 x N block of planar points, one column per sensing point.
template <typename Scalar>
using Points2 = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;

/// |theta| below this uses the Taylor expansion of the arc endpoint.
inline constexpr double kStraightSegmentThreshold = 1e-4;

template <typename Scalar = double>
struct SegmentGeometry {
  Scalar arc_length{};     // mm
  Scalar offset_length{};  // mm
  // true: connector sits at the tip and turns with the bend (odd segments);
  // false: connector sits at the base and stays unrotated (even segments).
  bool offset_follows_bend = true;
  int index = 1;  // 1-based position in the chain
};

template <typename Scalar>
void validate(const SegmentGeometry<Scalar>& geom) {
  using std::isfinite;
  if (!isfinite(geom.arc_length) || !(geom.arc_length > Scalar(0)))
    throw InvalidInput("segment " + std::to_string(geom.index) + ": arc_length must be > 0");
  if (!isfinite(geom.offset_length) || geom.offset_length < Scalar(0))
    throw InvalidInput("segment " + std::to_string(geom.index) + ": offset_length must be >= 0");
  if (geom.index < 1) throw InvalidInput("segment index must be >= 1");
}

template <typename Scalar>
void validate_bend_angle(Scalar theta) {
  using std::abs;
  using std::isfinite;
  if (!isfinite(theta)) throw InvalidInput("bend angle is not finite");
  if (!(abs(theta) < std::numbers::pi_v<Scalar>))
    throw InvalidInput("bend angle must satisfy |theta| < pi");
}

/// Frame-to-frame rotation contributed by a segment bent by theta.
template <typename Scalar>
Rotation2<Scalar> segment_rotation(Scalar theta) {
  using std::cos;
  using std::sin;
  const Scalar c = cos(theta);
  const Scalar s = sin(theta);
  Rotation2<Scalar> rot;
  rot << c, s,
        -s, c;
  return rot;
}

/// Endpoint of the constant-curvature arc, [kappa (1 - cos theta), kappa sin theta]
/// with kappa = L / theta.
template <typename Scalar>
Vector2<Scalar> curvature_endpoint(const SegmentGeometry<Scalar>& geom, Scalar theta) {
  using std::abs;
  using std::cos;
  using std::isfinite;
  using std::sin;
  if (!isfinite(theta)) throw InvalidInput("bend angle is not finite");
  const Scalar length = geom.arc_length;
  if (abs(theta) < Scalar(kStraightSegmentThreshold)) {
    const Scalar t2 = theta * theta;
    return {length * (theta / Scalar(2) - theta * t2 / Scalar(24)),
            length * (Scalar(1) - t2 / Scalar(6))};
  }
  const Scalar kappa = length / theta;
  return {kappa * (Scalar(1) - cos(theta)), kappa * sin(theta)};
}

/// Rigid connector vector. Applied as the row vector [d, 0] times R(theta_eff),
/// where theta_eff is theta for connectors that follow the bend and 0 otherwise.
template <typename Scalar>
Vector2<Scalar> offset_endpoint(const SegmentGeometry<Scalar>& geom, Scalar theta) {
  const Scalar effective = geom.offset_follows_bend ? theta : Scalar(0);
  const Eigen::Matrix<Scalar, 1, 2> row(geom.offset_length, Scalar(0));
  return (row * segment_rotation(effective)).transpose();
}

/// Segment endpoint in its own frame: arc endpoint plus connector.
template <typename Scalar>
Vector2<Scalar> segment_endpoint(const SegmentGeometry<Scalar>& geom, Scalar theta) {
  return curvature_endpoint(geom, theta) + offset_endpoint(geom, theta);
}

/// Composes per-segment local endpoints into world-frame endpoints:
/// P_W^i = sum_{k<=i} R(theta_1) ... R(theta_{k-1}) P_S^k.
template <typename Scalar>
Points2<Scalar> compose_world(const Points2<Scalar>& local_points,
                              const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& thetas) {
  if (local_points.cols() != thetas.size())
    throw InvalidInput("compose_world: point and angle counts differ");
  Points2<Scalar> world(2, local_points.cols());
  Rotation2<Scalar> prefix = Rotation2<Scalar>::Identity();
  Vector2<Scalar> position = Vector2<Scalar>::Zero();
  for (Eigen::Index k = 0; k < local_points.cols(); ++k) {
    position += prefix * local_points.col(k);
    world.col(k) = position;
    prefix = prefix * segment_rotation(thetas(k));
  }
  return world;
}

/// Local endpoints of every segment for the given bend angles.
template <typename Scalar>
Points2<Scalar> local_endpoints(std::span<const SegmentGeometry<Scalar>> geoms,
                                const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& thetas) {
  if (static_cast<Eigen::Index>(geoms.size()) != thetas.size())
    throw InvalidInput("segment and angle counts differ");
  Points2<Scalar> local(2, thetas.size());
  for (Eigen::Index k = 0; k < thetas.size(); ++k)
    local.col(k) = segment_endpoint(geoms[static_cast<std::size_t>(k)], thetas(k));
  return local;
}

/// World-frame endpoint of every segment in the chain.
template <typename Scalar>
Points2<Scalar> chain_to_world(std::span<const SegmentGeometry<Scalar>> geoms,
                               const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& thetas) {
  if (geoms.empty()) throw InvalidInput("chain_to_world: empty chain");
  return compose_world(local_endpoints(geoms, thetas), thetas);
}

/// Ordered chain of sensing segments.
struct RobotGeometry {
  std::vector<SegmentGeometry<double>> segments;

  std::size_t size() const noexcept { return segments.size(); }
  std::span<const SegmentGeometry<double>> span() const noexcept { return segments; }

  double total_length() const {
    double total = 0.0;
    for (const auto& s : segments) total += s.arc_length + s.offset_length;
    return total;
  }

  void validate() const {
    if (segments.empty()) throw InvalidInput("robot geometry has no segments");
    for (std::size_t i = 0; i < segments.size(); ++i) {
      proprio::validate(segments[i]);
      if (segments[i].index != static_cast<int>(i) + 1)
        throw InvalidInput("segment indices must be 1..N in order");
    }
  }

  /// Six sensing segments (three two-actuator modules), ~583 mm long.
  static RobotGeometry default_arm();

  /// N identical segments; connector parity alternates odd/even.
  static RobotGeometry uniform(std::size_t count, double arc_length, double offset_length);
};

inline RobotGeometry RobotGeometry::uniform(std::size_t count, double arc_length,
                                            double offset_length) {
  RobotGeometry robot;
  for (std::size_t i = 0; i < count; ++i) {
    const int index = static_cast<int>(i) + 1;
    robot.segments.push_back({arc_length, offset_length, index % 2 == 1, index});
  }
  return robot;
}

inline RobotGeometry RobotGeometry::default_arm() { return uniform(6, 80.0, 17.14); }

}  // namespace proprio
