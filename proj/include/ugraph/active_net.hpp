#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <vector>

#include "ugraph/bnn.hpp"
#include "ugraph/fusion.hpp"
#include "ugraph/mlp.hpp"
#include "ugraph/training.hpp"
#include "ugraph/types.hpp"

namespace ugraph {

inline constexpr int kActiveInputDim = 8;  // prior mean (3), prior std (3), action (2)

/// Which estimate's error supervises an action: the second BNN reading alone, or
/// the precision-weighted fusion of the first and second readings.
enum class LabelMode { kSecondEstimate, kFusedEstimate };

struct ActiveNetConfig {
  std::vector<int> hidden = {64, 64, 32};
  double learning_rate = 1e-4;
  int epochs = 200;
  int batch_size = 64;
  LabelMode label_mode = LabelMode::kSecondEstimate;
};

struct ActionScoreExample {
  Vec3 prior_mean = Vec3::Zero();
  Vec3 prior_std = Vec3::Zero();
  WristOrientation action;
  double score = 0.0;  // m
};

/// Deterministic regressor from (prior, action) to expected estimation error.
struct ActiveNetModel {
  MlpArchitecture arch{kActiveInputDim, {64, 64, 32}, 1};
  NormalizationStats normalization;
  VectorXd weights;
  double final_loss = 0.0;
};

inline VectorXd active_features(const ComEstimate& prior, const WristOrientation& a) {
  VectorXd x(kActiveInputDim);
  x << prior.mean, prior.std, a.theta1, a.theta2;
  return x;
}

/// One example per (grasp, non-default orientation). The grasp's (0, 0) record
/// provides the prior that every one of its examples is conditioned on.
inline std::vector<ActionScoreExample> make_training_labels(const PosteriorSamples& bnn,
                                                            const std::vector<DatasetRecord>& records,
                                                            LabelMode mode = LabelMode::kSecondEstimate) {
  MatrixXd x(kBnnInputDim, static_cast<Eigen::Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i)
    x.col(static_cast<Eigen::Index>(i)) = bnn_features(records[i].wrench, records[i].orientation);
  const auto [mean, std] = predict_batch(bnn, x);

  std::map<std::int64_t, Eigen::Index> default_index;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].orientation.is_default()) default_index.emplace(records[i].grasp_id, static_cast<Eigen::Index>(i));

  std::vector<ActionScoreExample> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.orientation.is_default()) continue;
    auto it = default_index.find(r.grasp_id);
    if (it == default_index.end())
      throw std::invalid_argument("grasp " + std::to_string(r.grasp_id) + " has no (0, 0) record");
    const ComEstimate prior{mean.col(it->second), std.col(it->second), true};
    const auto c = static_cast<Eigen::Index>(i);
    ComEstimate second{mean.col(c), std.col(c), true};
    const ComEstimate scored = mode == LabelMode::kFusedEstimate ? fuse(prior, second) : second;
    out.push_back({prior.mean, prior.std, r.orientation, (scored.mean - r.true_offset).norm()});
  }
  return out;
}

inline ActiveNetModel train_activenet(const std::vector<ActionScoreExample>& examples,
                                      const ActiveNetConfig& cfg, std::uint64_t seed) {
  if (examples.empty()) throw std::invalid_argument("cannot train ActiveNet on an empty example set");
  ActiveNetModel model;
  model.arch = {kActiveInputDim, cfg.hidden, 1};
  model.arch.validate();
  const auto n = static_cast<Eigen::Index>(examples.size());
  MatrixXd x(kActiveInputDim, n), y(1, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& e = examples[static_cast<std::size_t>(i)];
    x.col(i) = active_features({e.prior_mean, e.prior_std, true}, e.action);
    y(0, i) = e.score;
  }
  model.normalization = {Standardizer::fit(x), Standardizer::fit(y)};
  const MatrixXd xn = model.normalization.input.apply(x);
  const MatrixXd yn = model.normalization.output.apply(y);

  Rng rng = derive_rng(seed, Stream::kActiveNet);
  model.weights = init_weights(model.arch, rng);
  auto loss = [&](const std::vector<Eigen::Index>& idx, const VectorXd& w, VectorXd& grad) {
    return mse_loss(model.arch, xn, yn, idx, w, grad);
  };
  model.final_loss =
      train_minibatch(model.weights, n, {cfg.epochs, cfg.batch_size, cfg.learning_rate}, rng, loss);
  return model;
}

/// Scores for a batch of candidate actions under one prior, in meters.
inline std::vector<double> score_actions(const ActiveNetModel& model, const ComEstimate& prior,
                                         const std::vector<WristOrientation>& actions) {
  MatrixXd x(kActiveInputDim, static_cast<Eigen::Index>(actions.size()));
  for (std::size_t i = 0; i < actions.size(); ++i)
    x.col(static_cast<Eigen::Index>(i)) = active_features(prior, actions[i]);
  const MatrixXd out = model.normalization.output.invert(
      forward_batch(model.arch, model.weights, model.normalization.input.apply(x)).output());
  return {out.data(), out.data() + out.size()};
}

inline double score_action(const ActiveNetModel& model, const ComEstimate& prior,
                           const WristOrientation& action) {
  return score_actions(model, prior, {action}).front();
}

/// Square grid over the action bounds, theta1-major. Odd resolutions contain (0, 0) exactly.
inline std::vector<WristOrientation> action_grid(const ActionBounds& bounds, int resolution) {
  if (resolution < 2) throw std::invalid_argument("grid resolution must be at least 2");
  std::vector<double> axis(static_cast<std::size_t>(resolution));
  for (int i = 0; i < resolution; ++i)
    axis[static_cast<std::size_t>(i)] = bounds.max_angle * (2.0 * i - (resolution - 1)) / (resolution - 1);
  std::vector<WristOrientation> grid;
  grid.reserve(axis.size() * axis.size());
  for (double a : axis)
    for (double b : axis) grid.push_back({a, b});
  return grid;
}

/// Index of the minimum score; ties go to the smallest rotation, then lexicographic order.
inline std::size_t argmin_action(const std::vector<WristOrientation>& grid, const std::vector<double>& scores) {
  std::size_t best = 0;
  auto better = [&](std::size_t i, std::size_t j) {
    if (scores[i] != scores[j]) return scores[i] < scores[j];
    const double ni = grid[i].norm(), nj = grid[j].norm();
    if (ni != nj) return ni < nj;
    if (grid[i].theta1 != grid[j].theta1) return grid[i].theta1 < grid[j].theta1;
    return grid[i].theta2 < grid[j].theta2;
  };
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (better(i, best)) best = i;
  return best;
}

/// Grid search with an arbitrary scorer `double(const ComEstimate&, const WristOrientation&)`.
template <class Scorer>
WristOrientation select_action(const Scorer& scorer, const ComEstimate& prior, int grid_resolution,
                               const ActionBounds& bounds = {}) {
  const auto grid = action_grid(bounds, grid_resolution);
  std::vector<double> scores;
  scores.reserve(grid.size());
  for (const auto& a : grid) scores.push_back(scorer(prior, a));
  return grid[argmin_action(grid, scores)];
}

inline WristOrientation select_action(const ActiveNetModel& model, const ComEstimate& prior,
                                      int grid_resolution, const ActionBounds& bounds = {}) {
  const auto grid = action_grid(bounds, grid_resolution);
  return grid[argmin_action(grid, score_actions(model, prior, grid))];
}

}  // namespace ugraph
