#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ugraph/rng.hpp"
#include "ugraph/types.hpp"

namespace ugraph {

/// Ground-truth state of a grasped rigid object.
struct RigidGraspScene {
  double mass = 0.2;                      // kg
  Vec3 com_offset_gripper = Vec3::Zero(); // m, gripper frame at orientation (0, 0)
  double gravity = 9.81;                  // m/s^2, along world -Z
};

/// Additive per-axis Gaussian sensor noise plus optional in-hand slip about gripper Z.
struct NoiseModel {
  double sigma_force = 0.05;    // N
  double sigma_torque = 0.005;  // N m
  bool slip_enabled = false;
  double slip_prob = 0.0;
  double slip_sigma = 0.0;      // rad

  static NoiseModel noiseless() { return {0.0, 0.0, false, 0.0, 0.0}; }
};

struct DatasetRecord {
  std::int64_t grasp_id = 0;
  WristOrientation orientation;
  Wrench wrench;
  Vec3 true_offset = Vec3::Zero();
  double mass = 0.0;
};

inline void validate(const RigidGraspScene& scene, double max_offset = 0.15) {
  if (!(scene.mass > 0.0)) throw std::domain_error("scene mass must be positive");
  if (!(scene.gravity > 0.0)) throw std::domain_error("gravity must be positive");
  if (!scene.com_offset_gripper.allFinite() || scene.com_offset_gripper.norm() > max_offset)
    throw std::domain_error("CoM offset exceeds the configured maximum");
}

inline void validate(const NoiseModel& noise) {
  if (!(noise.sigma_force >= 0.0) || !(noise.sigma_torque >= 0.0) || !(noise.slip_sigma >= 0.0))
    throw std::domain_error("noise sigmas must be non-negative");
  if (!(noise.slip_prob >= 0.0 && noise.slip_prob <= 1.0))
    throw std::domain_error("slip probability must lie in [0, 1]");
}

inline Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << 1, 0, 0,
       0, c, -s,
       0, s, c;
  return r;
}

inline Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, 0, s,
       0, 1, 0,
       -s, 0, c;
  return r;
}

inline Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, -s, 0,
       s, c, 0,
       0, 0, 1;
  return r;
}

/// Gripper-to-world rotation R = Rx(theta1) * Ry(theta2).
inline Mat3 orientation_to_rotation(const WristOrientation& o, const ActionBounds& bounds = {}) {
  if (!std::isfinite(o.theta1) || !std::isfinite(o.theta2) || !bounds.contains(o))
    throw std::domain_error("wrist orientation outside action bounds");
  return rot_x(o.theta1) * rot_y(o.theta2);
}

/// Noiseless object-only wrench: gravity rotated into the gripper frame, torque r x F.
inline Wrench gravity_wrench(const RigidGraspScene& scene, const WristOrientation& o,
                             const ActionBounds& bounds = {}) {
  const Mat3 r = orientation_to_rotation(o, bounds);
  const Vec3 g_world(0.0, 0.0, -scene.mass * scene.gravity);
  Wrench w;
  w.force = r.transpose() * g_world;
  w.torque = scene.com_offset_gripper.cross(w.force);
  return w;
}

struct Observation {
  Wrench wrench;
  Vec3 offset = Vec3::Zero();  // offset in effect after any slip
  bool slipped = false;
};

/// One sensor reading. Slip only happens on a re-orientation away from (0, 0);
/// the rotated offset is handed back so the caller can carry it forward.
inline Observation observe_wrench(const RigidGraspScene& scene, const WristOrientation& o,
                                  const NoiseModel& noise, Rng& rng,
                                  const ActionBounds& bounds = {}) {
  Observation obs;
  RigidGraspScene actual = scene;
  if (noise.slip_enabled && !o.is_default()) {
    std::bernoulli_distribution slip(noise.slip_prob);
    if (slip(rng)) {
      std::normal_distribution<double> unit(0.0, 1.0);
      const double angle = noise.slip_sigma * unit(rng);
      actual.com_offset_gripper = rot_z(angle) * actual.com_offset_gripper;
      obs.slipped = true;
    }
  }
  obs.offset = actual.com_offset_gripper;
  obs.wrench = gravity_wrench(actual, o, bounds);

  std::normal_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 3; ++i) obs.wrench.force[i] += noise.sigma_force * unit(rng);
  for (int i = 0; i < 3; ++i) obs.wrench.torque[i] += noise.sigma_torque * unit(rng);
  return obs;
}

inline WristOrientation sample_orientation(const ActionBounds& bounds, Rng& rng) {
  std::uniform_real_distribution<double> u(-bounds.max_angle, bounds.max_angle);
  WristOrientation o;
  o.theta1 = u(rng);
  o.theta2 = u(rng);
  return o;
}

/// Records at (0, 0) followed by n_orientations uniformly drawn orientations.
/// Slip persists for the rest of the trial. Readings taken while the offset has
/// drifted more than slip_discard from the truth are dropped.
inline std::vector<DatasetRecord> generate_grasp_trial(const RigidGraspScene& scene,
                                                       int n_orientations,
                                                       const ActionBounds& bounds,
                                                       const NoiseModel& noise, Rng& rng,
                                                       std::int64_t grasp_id = 0,
                                                       double slip_discard = 0.005) {
  if (n_orientations < 1) throw std::domain_error("n_orientations must be at least 1");
  validate(noise);
  std::vector<DatasetRecord> records;
  records.reserve(static_cast<std::size_t>(n_orientations) + 1);
  RigidGraspScene current = scene;
  auto take = [&](const WristOrientation& o) {
    const Observation obs = observe_wrench(current, o, noise, rng, bounds);
    current.com_offset_gripper = obs.offset;
    if ((obs.offset - scene.com_offset_gripper).norm() > slip_discard) return;
    records.push_back({grasp_id, o, obs.wrench, scene.com_offset_gripper, scene.mass});
  };
  take(WristOrientation{});
  for (int i = 0; i < n_orientations; ++i) take(sample_orientation(bounds, rng));
  return records;
}

/// Parameters for a synthetic data collection campaign.
struct DatasetConfig {
  int grasps = 50;
  int orientations_per_grasp = 40;
  double mass_min = 0.12736;
  double mass_max = 0.58536;
  Vec3 offset_box = Vec3(0.075, 0.075, 0.08);
  double max_offset = 0.15;
  double gravity = 9.81;
  double slip_discard = 0.005;
  ActionBounds bounds;
  NoiseModel noise;
};

inline void validate(const DatasetConfig& c) {
  if (c.grasps < 0) throw ConfigError("dataset.grasps must be non-negative");
  if (c.orientations_per_grasp < 1) throw ConfigError("dataset.orientations_per_grasp must be at least 1");
  if (!(c.mass_min > 0.0)) throw ConfigError("dataset.mass_min must be positive");
  if (!(c.mass_min <= c.mass_max)) throw ConfigError("dataset.mass_min must not exceed dataset.mass_max");
  if (!(c.offset_box.minCoeff() >= 0.0)) throw ConfigError("dataset.offset_box must be non-negative");
  if (c.offset_box.norm() > c.max_offset) throw ConfigError("dataset.offset_box corner exceeds dataset.max_offset");
  if (!(c.gravity > 0.0)) throw ConfigError("dataset.gravity must be positive");
  if (!(c.bounds.max_angle > 0.0 && c.bounds.max_angle < std::numbers::pi / 2))
    throw ConfigError("dataset.max_angle must lie in (0, pi/2)");
  try {
    validate(c.noise);
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("dataset.noise: ") + e.what());
  }
}

inline RigidGraspScene sample_scene(const DatasetConfig& c, Rng& rng) {
  std::uniform_real_distribution<double> mass(c.mass_min, c.mass_max);
  RigidGraspScene scene;
  scene.mass = mass(rng);
  for (int i = 0; i < 3; ++i) {
    std::uniform_real_distribution<double> u(-c.offset_box[i], c.offset_box[i]);
    scene.com_offset_gripper[i] = u(rng);
  }
  scene.gravity = c.gravity;
  return scene;
}

/// Every grasp draws from its own stream derived from (seed, grasp_id), so
/// output is independent of generation order.
inline std::vector<DatasetRecord> generate_dataset(const DatasetConfig& c, std::uint64_t seed) {
  validate(c);
  std::vector<DatasetRecord> out;
  out.reserve(static_cast<std::size_t>(c.grasps) * (c.orientations_per_grasp + 1));
  for (int g = 0; g < c.grasps; ++g) {
    Rng rng = derive_rng(seed, Stream::kDataset, {static_cast<std::uint64_t>(g)});
    const RigidGraspScene scene = sample_scene(c, rng);
    auto trial = generate_grasp_trial(scene, c.orientations_per_grasp, c.bounds, c.noise, rng, g,
                                      c.slip_discard);
    out.insert(out.end(), trial.begin(), trial.end());
  }
  return out;
}

}  // namespace ugraph
