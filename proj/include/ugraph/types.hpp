#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ugraph {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Thrown for invalid or inconsistent configuration values.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a file cannot be read, written, or parsed.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when a computation produces non-finite values or cannot proceed.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The force reading is too small to resolve a lever arm from.
struct InsufficientSignalError : NumericalError {
  using NumericalError::NumericalError;
};

/// The two free wrist joints. theta1 rotates about gripper X, theta2 about gripper Y.
struct WristOrientation {
  double theta1 = 0.0;
  double theta2 = 0.0;

  bool is_default() const { return theta1 == 0.0 && theta2 == 0.0; }
  double norm() const { return std::hypot(theta1, theta2); }
  friend bool operator==(const WristOrientation&, const WristOrientation&) = default;
};

/// Symmetric box [-max_angle, max_angle]^2 of reachable wrist orientations.
struct ActionBounds {
  double max_angle = std::numbers::pi / 3.0;

  bool contains(const WristOrientation& o) const {
    return std::abs(o.theta1) <= max_angle && std::abs(o.theta2) <= max_angle;
  }
};

/// Object-only force/torque in the gripper (sensor) frame.
struct Wrench {
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();

  bool all_finite() const { return force.allFinite() && torque.allFinite(); }
};

/// Mean and per-axis standard deviation of a CoM offset, meters.
/// Analytical estimates carry no uncertainty and leave std_defined false.
struct ComEstimate {
  Vec3 mean = Vec3::Zero();
  Vec3 std = Vec3::Zero();
  bool std_defined = true;
};

}  // namespace ugraph
