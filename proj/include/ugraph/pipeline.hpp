#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ugraph/active_net.hpp"
#include "ugraph/analytical.hpp"
#include "ugraph/bnn.hpp"
#include "ugraph/fusion.hpp"
#include "ugraph/rng.hpp"
#include "ugraph/wrench_sim.hpp"

namespace ugraph {

/// Anything that can hold a grasped object at a wrist orientation and report the
/// object-only wrench. The first query of every episode must be (0, 0).
class WrenchSource {
 public:
  virtual ~WrenchSource() = default;
  virtual Wrench observe(const WristOrientation& o) = 0;
  /// Known CoM offset when the source is simulated.
  virtual std::optional<Vec3> ground_truth() const { return std::nullopt; }
};

/// Single-episode simulated source. Query k draws noise from the stream
/// (seed, episode_id, k), so every method sees the same (0, 0) reading.
class SimulatedWrenchSource final : public WrenchSource {
 public:
  SimulatedWrenchSource(RigidGraspScene scene, NoiseModel noise, std::uint64_t seed,
                        std::uint64_t episode_id, ActionBounds bounds = {})
      : scene_(std::move(scene)), truth_(scene_.com_offset_gripper), noise_(noise),
        bounds_(bounds), seed_(seed), episode_id_(episode_id) {
    validate(scene_);
    validate(noise_);
  }

  Wrench observe(const WristOrientation& o) override {
    if (queries_ == 0 && !o.is_default())
      throw std::logic_error("the first observation of an episode must be at (0, 0)");
    Rng rng = derive_rng(seed_, Stream::kEpisodeNoise, {episode_id_, queries_});
    ++queries_;
    const Observation obs = observe_wrench(scene_, o, noise_, rng, bounds_);
    scene_.com_offset_gripper = obs.offset;
    return obs.wrench;
  }

  std::optional<Vec3> ground_truth() const override { return truth_; }
  std::uint64_t queries() const { return queries_; }

 private:
  RigidGraspScene scene_;
  Vec3 truth_;
  NoiseModel noise_;
  ActionBounds bounds_;
  std::uint64_t seed_;
  std::uint64_t episode_id_;
  std::uint64_t queries_ = 0;
};

struct EpisodeResult {
  std::string method;
  ComEstimate estimate;
  Vec3 true_offset = Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
  Vec3 abs_error = Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
  std::vector<WristOrientation> actions;

  double total_error() const { return abs_error.norm(); }
};

namespace method {
inline constexpr const char* kUGraph = "U-GRAPH";
inline constexpr const char* kOneGrasp = "One Grasp";
inline constexpr const char* kRandomRotate = "Random Rotate";
inline constexpr const char* kAnalytical = "Analytical Solution";
}  // namespace method

namespace detail {

inline EpisodeResult finish(const char* name, const WrenchSource& source, ComEstimate estimate,
                            std::vector<WristOrientation> actions) {
  EpisodeResult r;
  r.method = name;
  r.estimate = std::move(estimate);
  r.actions = std::move(actions);
  if (auto truth = source.ground_truth()) {
    r.true_offset = *truth;
    r.abs_error = (r.estimate.mean - *truth).cwiseAbs();
  }
  return r;
}

inline ComEstimate two_reading_estimate(WrenchSource& source, const PosteriorSamples& bnn,
                                        const ComEstimate& prior, const WristOrientation& action) {
  const Wrench second = source.observe(action);
  return fuse(prior, to_estimate(predict(bnn, second, action)));
}

}  // namespace detail

/// First reading at (0, 0) through the BNN.
inline ComEstimate first_estimate(WrenchSource& source, const PosteriorSamples& bnn) {
  const WristOrientation home{};
  return to_estimate(predict(bnn, source.observe(home), home));
}

inline EpisodeResult run_one_grasp(WrenchSource& source, const PosteriorSamples& bnn) {
  return detail::finish(method::kOneGrasp, source, first_estimate(source, bnn), {WristOrientation{}});
}

/// Prior at (0, 0), ActiveNet grid search for the second pose, BNN again, then fusion.
inline EpisodeResult run_ugraph(WrenchSource& source, const PosteriorSamples& bnn,
                                const ActiveNetModel& activenet, int grid_resolution,
                                const ActionBounds& bounds = {}) {
  const ComEstimate prior = first_estimate(source, bnn);
  const WristOrientation action = select_action(activenet, prior, grid_resolution, bounds);
  return detail::finish(method::kUGraph, source, detail::two_reading_estimate(source, bnn, prior, action),
                        {WristOrientation{}, action});
}

/// As run_ugraph with the second pose drawn uniformly from the action bounds.
inline EpisodeResult run_random_rotate(WrenchSource& source, const PosteriorSamples& bnn, Rng& rng,
                                       const ActionBounds& bounds = {}) {
  const ComEstimate prior = first_estimate(source, bnn);
  const WristOrientation action = sample_orientation(bounds, rng);
  return detail::finish(method::kRandomRotate, source,
                        detail::two_reading_estimate(source, bnn, prior, action),
                        {WristOrientation{}, action});
}

/// Closed-form lever arm at the default pose; z is unobservable there and stays 0.
inline EpisodeResult run_analytical(WrenchSource& source, double force_floor = kDefaultForceFloor) {
  const Wrench w = source.observe(WristOrientation{});
  ComEstimate e = solve_com_analytical(w, force_floor);
  e.mean.z() = 0.0;
  return detail::finish(method::kAnalytical, source, std::move(e), {WristOrientation{}});
}

}  // namespace ugraph
