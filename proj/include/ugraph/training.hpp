#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "ugraph/mlp.hpp"
#include "ugraph/rng.hpp"
#include "ugraph/types.hpp"

namespace ugraph {

struct TrainConfig {
  int epochs = 200;
  int batch_size = 64;
  double learning_rate = 1e-3;
};

/// Rectified Adam. Falls back to un-normalized momentum while the variance
/// estimate is not yet tractable (rho_t <= 5).
class RAdam {
 public:
  explicit RAdam(Eigen::Index n, double lr, double beta1 = 0.9, double beta2 = 0.999,
                 double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
        m_(VectorXd::Zero(n)), v_(VectorXd::Zero(n)) {}

  void step(VectorXd& params, const VectorXd& grad) {
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double beta2_t = std::pow(beta2_, t_);
    const double bc2 = 1.0 - beta2_t;
    const double rho_inf = 2.0 / (1.0 - beta2_) - 1.0;
    const double rho_t = rho_inf - 2.0 * t_ * beta2_t / bc2;
    if (rho_t > 5.0) {
      const double rect = std::sqrt((rho_t - 4.0) * (rho_t - 2.0) * rho_inf /
                                    ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t));
      params.array() -= lr_ * rect * (m_.array() / bc1) * std::sqrt(bc2) /
                        (v_.array().sqrt() + eps_);
    } else {
      params -= lr_ * m_ / bc1;
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  VectorXd m_, v_;
};

/// Loss over a batch of sample indices; writes the gradient and returns the loss.
using BatchLoss =
    std::function<double(const std::vector<Eigen::Index>&, const VectorXd&, VectorXd&)>;

/// Shuffled mini-batch descent with RAdam. Returns the loss on the full set at the end.
inline double train_minibatch(VectorXd& params, Eigen::Index n_samples, const TrainConfig& cfg,
                              Rng& rng, const BatchLoss& loss) {
  if (n_samples <= 0) throw std::invalid_argument("cannot train on an empty dataset");
  if (cfg.batch_size < 1 || cfg.epochs < 0 || !(cfg.learning_rate > 0.0))
    throw ConfigError("invalid training configuration");
  RAdam opt(params.size(), cfg.learning_rate);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n_samples));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  VectorXd grad(params.size());
  std::vector<Eigen::Index> batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                   order.begin() + static_cast<std::ptrdiff_t>(end));
      loss(batch, params, grad);
      opt.step(params, grad);
    }
    if (!params.allFinite()) throw NumericalError("training diverged (non-finite weights)");
  }
  std::vector<Eigen::Index> all(order.size());
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  return loss(all, params, grad);
}

/// Mean over samples and outputs of the squared error, with its gradient.
inline double mse_loss(const MlpArchitecture& arch, const MatrixXd& inputs, const MatrixXd& targets,
                       const std::vector<Eigen::Index>& idx, const VectorXd& w, VectorXd& grad) {
  const MatrixXd x = inputs(Eigen::all, idx);
  const MatrixXd y = targets(Eigen::all, idx);
  const ForwardCache cache = forward_batch(arch, w, x);
  const MatrixXd resid = cache.output() - y;
  const double denom = static_cast<double>(resid.size());
  grad = backward(arch, w, cache, (2.0 / denom) * resid);
  return resid.squaredNorm() / denom;
}

}  // namespace ugraph
