#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "ugraph/mlp.hpp"
#include "ugraph/nuts.hpp"
#include "ugraph/rng.hpp"
#include "ugraph/training.hpp"
#include "ugraph/types.hpp"
#include "ugraph/wrench_sim.hpp"

namespace ugraph {

inline constexpr int kBnnInputDim = 8;
inline constexpr int kComDim = 3;
inline constexpr double kStdFloor = 1e-6;  // m

struct BnnConfig {
  std::vector<int> hidden = {32, 16};
  /// Adds three outputs h(x) so the observation std becomes obs_sigma * exp(h(x)).
  bool noise_head = true;
  int samples = 200;
  int warmup = 50;
  double learning_rate = 1e-3;
  int epochs = 200;
  int batch_size = 64;
  double prior_std = 0.5;
  double sigma_prior_scale = 1.0;
  int max_tree_depth = 10;
  double target_accept = 0.8;
};

inline MlpArchitecture bnn_architecture(const BnnConfig& cfg) {
  MlpArchitecture a{kBnnInputDim, cfg.hidden, cfg.noise_head ? 2 * kComDim : kComDim};
  a.validate();
  return a;
}

/// [fx, fy, fz, tx, ty, tz, theta1, theta2]
inline VectorXd bnn_features(const Wrench& w, const WristOrientation& o) {
  VectorXd x(kBnnInputDim);
  x << w.force, w.torque, o.theta1, o.theta2;
  return x;
}

/// Normalized regression set, one sample per column.
struct RegressionData {
  MatrixXd inputs;   // 8 x N
  MatrixXd targets;  // 3 x N

  Eigen::Index size() const { return inputs.cols(); }
};

/// Gaussian prior on weights centered at `center`, half-normal prior on each obs sigma.
struct BnnPrior {
  VectorXd center;
  double weight_std = 0.5;
  double sigma_scale = 1.0;
};

/// Network plus likelihood definition: mean = first three outputs, and with a
/// noise head std_k(x) = obs_sigma_k * exp(h_k(x)) for the remaining three.
struct BnnModelSpec {
  MlpArchitecture arch;
  bool noise_head = false;

  Eigen::Index weight_count() const { return arch.param_count(); }
  Eigen::Index state_size() const { return arch.param_count() + kComDim; }
};

namespace detail {

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;

struct LogPosteriorParts {
  double likelihood = 0.0;
  double weight_prior = 0.0;
  double sigma_prior = 0.0;
  double total() const { return likelihood + weight_prior + sigma_prior; }
};

/// Log posterior in (weights, log obs_sigma) with the log-Jacobian excluded;
/// optionally accumulates the gradient with respect to (weights, log obs_sigma).
inline LogPosteriorParts evaluate_log_posterior(const BnnModelSpec& spec, const BnnPrior& prior,
                                                const RegressionData& data, const VectorXd& weights,
                                                const Vec3& obs_sigma, VectorXd* grad) {
  if (weights.size() != spec.weight_count()) throw std::invalid_argument("weight vector length mismatch");
  if (!(obs_sigma.minCoeff() > 0.0)) throw std::domain_error("obs_sigma must be positive");
  if (prior.center.size() != weights.size()) throw std::invalid_argument("prior center length mismatch");
  LogPosteriorParts parts;
  VectorXd g_w = VectorXd::Zero(weights.size());
  Vec3 g_u = Vec3::Zero();

  const Eigen::Index n = data.size();
  if (n > 0) {
    const ForwardCache cache = forward_batch(spec.arch, weights, data.inputs);
    const MatrixXd& out = cache.output();
    const MatrixXd resid = data.targets - out.topRows(kComDim);
    MatrixXd log_scale = MatrixXd::Zero(kComDim, n);
    if (spec.noise_head) log_scale = out.bottomRows(kComDim);
    log_scale.colwise() += obs_sigma.array().log().matrix();
    const MatrixXd inv_var = (-2.0 * log_scale.array()).exp().matrix();
    const MatrixXd z2 = resid.cwiseAbs2().cwiseProduct(inv_var);
    parts.likelihood = -kHalfLog2Pi * static_cast<double>(resid.size()) - log_scale.sum() - 0.5 * z2.sum();
    if (grad) {
      MatrixXd d_out(out.rows(), n);
      d_out.topRows(kComDim) = resid.cwiseProduct(inv_var);
      const MatrixXd d_log_scale = (z2.array() - 1.0).matrix();
      if (spec.noise_head) d_out.bottomRows(kComDim) = d_log_scale;
      g_w = backward(spec.arch, weights, cache, d_out);
      g_u = d_log_scale.rowwise().sum();
    }
  }

  const double ws = prior.weight_std;
  const VectorXd dev = weights - prior.center;
  parts.weight_prior = -static_cast<double>(weights.size()) * (kHalfLog2Pi + std::log(ws)) -
                       0.5 * dev.squaredNorm() / (ws * ws);
  const double ss = prior.sigma_scale;
  for (int k = 0; k < kComDim; ++k)
    parts.sigma_prior += std::log(2.0) - kHalfLog2Pi - std::log(ss) -
                         0.5 * obs_sigma[k] * obs_sigma[k] / (ss * ss);
  if (grad) {
    g_w -= dev / (ws * ws);
    g_u -= obs_sigma.cwiseAbs2() / (ss * ss);
    grad->resize(spec.state_size());
    grad->head(weights.size()) = g_w;
    grad->tail(kComDim) = g_u;
  }
  if (!std::isfinite(parts.total())) throw NumericalError("log posterior is not finite");
  return parts;
}

}  // namespace detail

/// Gaussian log-likelihood + Gaussian weight prior + half-normal obs-sigma prior.
inline double log_posterior(const BnnModelSpec& spec, const BnnPrior& prior,
                            const RegressionData& data, const VectorXd& weights,
                            const Vec3& obs_sigma) {
  return detail::evaluate_log_posterior(spec, prior, data, weights, obs_sigma, nullptr).total();
}

/// Sampling state: weights followed by u = log(obs_sigma).
inline VectorXd pack_state(const VectorXd& weights, const Vec3& obs_sigma) {
  VectorXd s(weights.size() + kComDim);
  s << weights, obs_sigma.array().log().matrix();
  return s;
}

/// Log density over the unconstrained state, i.e. log_posterior plus the
/// log-Jacobian sum(u) of sigma = exp(u).
inline double log_posterior_unconstrained(const BnnModelSpec& spec, const BnnPrior& prior,
                                          const RegressionData& data, const VectorXd& state) {
  const Vec3 u = state.tail(kComDim);
  return log_posterior(spec, prior, data, state.head(spec.weight_count()), u.array().exp().matrix()) +
         u.sum();
}

/// Exact reverse-mode gradient of log_posterior_unconstrained, length P + 3.
inline VectorXd grad_log_posterior(const BnnModelSpec& spec, const BnnPrior& prior,
                                   const RegressionData& data, const VectorXd& state) {
  const Vec3 u = state.tail(kComDim);
  VectorXd g;
  detail::evaluate_log_posterior(spec, prior, data, state.head(spec.weight_count()),
                                 u.array().exp().matrix(), &g);
  g.tail(kComDim).array() += 1.0;
  return g;
}

/// Value and gradient in one pass, in the form the sampler consumes.
struct BnnDensity {
  const BnnModelSpec& spec;
  const BnnPrior& prior;
  const RegressionData& data;

  double operator()(const VectorXd& state, VectorXd& grad) const {
    const Vec3 u = state.tail(kComDim);
    const auto parts = detail::evaluate_log_posterior(spec, prior, data, state.head(spec.weight_count()),
                                                      u.array().exp().matrix(), &grad);
    grad.tail(kComDim).array() += 1.0;
    return parts.total() + u.sum();
  }
};

struct MapResult {
  VectorXd weights;
  Vec3 obs_sigma = Vec3::Ones();
  double mse = 0.0;  // final mean-squared error on normalized targets
};

/// Deterministic pretraining. Stage one fits the mean outputs by MSE; with a noise
/// head, stage two refits everything by Gaussian negative log-likelihood.
inline MapResult pretrain_map(const BnnModelSpec& spec, const RegressionData& data,
                              const TrainConfig& cfg, Rng& rng) {
  if (data.size() == 0) throw std::invalid_argument("cannot pretrain on an empty dataset");
  MapResult res;
  res.weights = init_weights(spec.arch, rng);
  const int last = spec.arch.layer_count() - 1;
  const int in_last = spec.arch.layer_in(last);
  const Eigen::Index off = spec.arch.layer_offset(last);
  if (spec.noise_head) {
    for (int r = kComDim; r < 2 * kComDim; ++r) {
      RowMajorMutMap(res.weights.data() + off, spec.arch.output_dim, in_last).row(r).setZero();
      res.weights[off + Eigen::Index{spec.arch.output_dim} * in_last + r] = 0.0;
    }
  }

  auto mean_loss = [&](const std::vector<Eigen::Index>& idx, const VectorXd& w, VectorXd& grad) {
    const MatrixXd x = data.inputs(Eigen::all, idx);
    const MatrixXd y = data.targets(Eigen::all, idx);
    const ForwardCache cache = forward_batch(spec.arch, w, x);
    const MatrixXd resid = cache.output().topRows(kComDim) - y;
    const double denom = static_cast<double>(resid.size());
    MatrixXd d_out = MatrixXd::Zero(spec.arch.output_dim, resid.cols());
    d_out.topRows(kComDim) = (2.0 / denom) * resid;
    grad = backward(spec.arch, w, cache, d_out);
    return resid.squaredNorm() / denom;
  };
  res.mse = train_minibatch(res.weights, data.size(), cfg, rng, mean_loss);

  {
    const MatrixXd resid =
        forward_batch(spec.arch, res.weights, data.inputs).output().topRows(kComDim) - data.targets;
    for (int k = 0; k < kComDim; ++k)
      res.obs_sigma[k] = std::max(1e-3, std::sqrt(resid.row(k).squaredNorm() / static_cast<double>(data.size())));
  }

  if (spec.noise_head) {
    const Vec3 log_sigma = res.obs_sigma.array().log();
    auto nll = [&](const std::vector<Eigen::Index>& idx, const VectorXd& w, VectorXd& grad) {
      const MatrixXd x = data.inputs(Eigen::all, idx);
      const MatrixXd y = data.targets(Eigen::all, idx);
      const ForwardCache cache = forward_batch(spec.arch, w, x);
      const MatrixXd& out = cache.output();
      const MatrixXd resid = y - out.topRows(kComDim);
      MatrixXd log_scale = out.bottomRows(kComDim);
      log_scale.colwise() += log_sigma;
      const MatrixXd inv_var = (-2.0 * log_scale.array()).exp().matrix();
      const MatrixXd z2 = resid.cwiseAbs2().cwiseProduct(inv_var);
      const double denom = static_cast<double>(resid.size());
      MatrixXd d_out(out.rows(), out.cols());
      d_out.topRows(kComDim) = -resid.cwiseProduct(inv_var) / denom;
      d_out.bottomRows(kComDim) = (1.0 - z2.array()).matrix() / denom;
      grad = backward(spec.arch, w, cache, d_out);
      return (log_scale.sum() + 0.5 * z2.sum()) / denom + detail::kHalfLog2Pi;
    };
    train_minibatch(res.weights, data.size(), cfg, rng, nll);
    const MatrixXd resid =
        forward_batch(spec.arch, res.weights, data.inputs).output().topRows(kComDim) - data.targets;
    res.mse = resid.squaredNorm() / static_cast<double>(resid.size());
  }
  return res;
}

/// Posterior draws plus everything needed to evaluate the predictive distribution.
struct PosteriorSamples {
  BnnModelSpec spec;
  NormalizationStats normalization;
  std::vector<VectorXd> samples;     // weight vectors
  std::vector<Vec3> obs_sigma;       // normalized units, one per sample
  nuts::Diagnostics diagnostics;
  double map_mse = 0.0;
};

struct PredictiveDistribution {
  Vec3 mean = Vec3::Zero();
  Vec3 std = Vec3::Constant(kStdFloor);
};

inline ComEstimate to_estimate(const PredictiveDistribution& p) { return {p.mean, p.std, true}; }

/// Normalizes raw records into a regression set using the given scalers.
inline RegressionData make_regression_data(const std::vector<DatasetRecord>& records,
                                           const NormalizationStats& norm) {
  MatrixXd x(kBnnInputDim, static_cast<Eigen::Index>(records.size()));
  MatrixXd y(kComDim, static_cast<Eigen::Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    x.col(c) = bnn_features(records[i].wrench, records[i].orientation);
    y.col(c) = records[i].true_offset;
  }
  return {norm.input.apply(x), norm.output.apply(y)};
}

inline NormalizationStats fit_normalization(const std::vector<DatasetRecord>& records) {
  MatrixXd x(kBnnInputDim, static_cast<Eigen::Index>(records.size()));
  MatrixXd y(kComDim, static_cast<Eigen::Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    x.col(c) = bnn_features(records[i].wrench, records[i].orientation);
    y.col(c) = records[i].true_offset;
  }
  return {Standardizer::fit(x), Standardizer::fit(y)};
}

/// Pretrains a MAP network, then samples the posterior centered on it with NUTS.
inline PosteriorSamples train_bnn(const std::vector<DatasetRecord>& records, const BnnConfig& cfg,
                                  std::uint64_t seed) {
  if (records.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  PosteriorSamples ps;
  ps.spec = {bnn_architecture(cfg), cfg.noise_head};
  ps.normalization = fit_normalization(records);
  const RegressionData data = make_regression_data(records, ps.normalization);

  Rng pre_rng = derive_rng(seed, Stream::kPretrain);
  const MapResult map = pretrain_map(ps.spec, data, {cfg.epochs, cfg.batch_size, cfg.learning_rate}, pre_rng);
  ps.map_mse = map.mse;

  const BnnPrior prior{map.weights, cfg.prior_std, cfg.sigma_prior_scale};
  const BnnDensity density{ps.spec, prior, data};
  nuts::Config nc;
  nc.n_samples = cfg.samples;
  nc.n_warmup = cfg.warmup;
  nc.max_depth = cfg.max_tree_depth;
  nc.target_accept = cfg.target_accept;
  Rng nuts_rng = derive_rng(seed, Stream::kNuts);
  nuts::Result result = nuts::sample(density, pack_state(map.weights, map.obs_sigma), nc, nuts_rng);

  ps.diagnostics = result.diagnostics;
  ps.samples.reserve(result.draws.size());
  ps.obs_sigma.reserve(result.draws.size());
  for (auto& d : result.draws) {
    ps.obs_sigma.emplace_back(Vec3(d.tail(kComDim)).array().exp());
    ps.samples.emplace_back(d.head(ps.spec.weight_count()));
  }
  return ps;
}

/// Predictive mean and std for a batch of raw 8-d feature columns. The std combines
/// between-sample spread with the mean squared observation noise, in meters.
inline std::pair<MatrixXd, MatrixXd> predict_batch(const PosteriorSamples& ps, const MatrixXd& raw_inputs) {
  if (ps.samples.empty()) throw std::invalid_argument("posterior has no samples");
  if (ps.obs_sigma.size() != ps.samples.size()) throw std::invalid_argument("obs_sigma/sample count mismatch");
  const Eigen::Index n = raw_inputs.cols();
  const MatrixXd x = ps.normalization.input.apply(raw_inputs);
  const VectorXd& out_std = ps.normalization.output.std;
  MatrixXd sum = MatrixXd::Zero(kComDim, n);
  MatrixXd sum_sq = MatrixXd::Zero(kComDim, n);
  MatrixXd noise_var = MatrixXd::Zero(kComDim, n);
  for (std::size_t s = 0; s < ps.samples.size(); ++s) {
    const MatrixXd out = forward_batch(ps.spec.arch, ps.samples[s], x).output();
    const MatrixXd mu = ps.normalization.output.invert(out.topRows(kComDim));
    sum += mu;
    sum_sq += mu.cwiseAbs2();
    MatrixXd sd = (ps.obs_sigma[s].cwiseProduct(out_std)).replicate(1, n);
    if (ps.spec.noise_head) sd = sd.cwiseProduct(out.bottomRows(kComDim).array().exp().matrix());
    noise_var += sd.cwiseAbs2();
  }
  const double count = static_cast<double>(ps.samples.size());
  MatrixXd mean = sum / count;
  MatrixXd spread = (sum_sq / count - mean.cwiseAbs2()).cwiseMax(0.0);
  MatrixXd std = (spread + noise_var / count).cwiseSqrt().cwiseMax(kStdFloor);
  return {std::move(mean), std::move(std)};
}

inline PredictiveDistribution predict(const PosteriorSamples& ps, const Wrench& w, const WristOrientation& o) {
  const auto [mean, std] = predict_batch(ps, bnn_features(w, o));
  return {mean.col(0), std.col(0)};
}

}  // namespace ugraph
