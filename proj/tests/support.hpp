#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "ugraph/bnn.hpp"
#include "ugraph/nuts.hpp"

namespace ugraph::oracle {

/// Random normalized regression problem for a small BNN.
struct SmallProblem {
  BnnModelSpec spec;
  BnnPrior prior;
  RegressionData data;
  VectorXd state;  // (weights, log sigma)
};

inline SmallProblem random_problem(std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<int> width(1, 5), depth(1, 2), rows(0, 12);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  SmallProblem p;
  std::vector<int> hidden;
  const int layers = depth(rng);
  for (int l = 0; l < layers; ++l) hidden.push_back(width(rng));
  p.spec.noise_head = coin(rng);
  p.spec.arch = {kBnnInputDim, hidden, p.spec.noise_head ? 2 * kComDim : kComDim};
  const int n = rows(rng);
  p.data.inputs = MatrixXd(kBnnInputDim, n);
  p.data.targets = MatrixXd(kComDim, n);
  for (Eigen::Index i = 0; i < p.data.inputs.size(); ++i) p.data.inputs.data()[i] = n01(rng);
  for (Eigen::Index i = 0; i < p.data.targets.size(); ++i) p.data.targets.data()[i] = n01(rng);
  const VectorXd w = init_weights(p.spec.arch, rng);
  p.prior.center = w;
  for (Eigen::Index i = 0; i < w.size(); ++i) p.prior.center[i] += 0.3 * n01(rng);
  p.prior.weight_std = 0.5;
  p.prior.sigma_scale = 1.0;
  Vec3 sigma;
  for (int k = 0; k < 3; ++k) sigma[k] = std::exp(0.4 * n01(rng));
  p.state = pack_state(w, sigma);
  return p;
}

struct GradientCheck {
  double worst_relative = 0.0;
  Eigen::Index entries = 0;
};

/// Central differences with step h against grad_log_posterior. Relative error
/// uses max(|fd|, floor) as the denominator so exact zeros do not divide by zero.
inline GradientCheck check_gradient(const SmallProblem& p, double h = 1e-5, double floor = 1e-2) {
  GradientCheck out;
  const VectorXd g = grad_log_posterior(p.spec, p.prior, p.data, p.state);
  for (Eigen::Index i = 0; i < p.state.size(); ++i) {
    VectorXd up = p.state, down = p.state;
    up[i] += h;
    down[i] -= h;
    const double fd = (log_posterior_unconstrained(p.spec, p.prior, p.data, up) -
                       log_posterior_unconstrained(p.spec, p.prior, p.data, down)) /
                      (2.0 * h);
    const double rel = std::abs(g[i] - fd) / std::max(std::abs(fd), floor);
    out.worst_relative = std::max(out.worst_relative, rel);
    ++out.entries;
  }
  return out;
}

struct MomentSummary {
  VectorXd mean;
  VectorXd var;
};

inline MomentSummary moments(const std::vector<VectorXd>& draws) {
  const auto n = static_cast<double>(draws.size());
  MomentSummary m{VectorXd::Zero(draws.front().size()), VectorXd::Zero(draws.front().size())};
  for (const auto& d : draws) m.mean += d / n;
  for (const auto& d : draws) m.var += (d - m.mean).cwiseAbs2() / (n - 1.0);
  return m;
}

/// Batch-means Monte Carlo standard error of the mean of one coordinate.
inline double batch_mcse(const std::vector<VectorXd>& draws, Eigen::Index coord, int batches = 20) {
  const std::size_t len = draws.size() / static_cast<std::size_t>(batches);
  std::vector<double> means;
  for (int b = 0; b < batches; ++b) {
    double s = 0;
    for (std::size_t i = 0; i < len; ++i) s += draws[static_cast<std::size_t>(b) * len + i][coord];
    means.push_back(s / static_cast<double>(len));
  }
  double m = 0, v = 0;
  for (double x : means) m += x / batches;
  for (double x : means) v += (x - m) * (x - m) / (batches - 1);
  return std::sqrt(v / batches);
}

/// Conjugate Gaussian linear regression with known noise, and its exact posterior.
struct ConjugateRegression {
  MatrixXd x;
  VectorXd y;
  double noise_var = 0.25;
  double prior_var = 4.0;
  VectorXd post_mean;
  MatrixXd post_cov;

  double operator()(const VectorXd& b, VectorXd& g) const {
    const VectorXd r = y - x * b;
    g = x.transpose() * r / noise_var - b / prior_var;
    return -0.5 * r.squaredNorm() / noise_var - 0.5 * b.squaredNorm() / prior_var;
  }
};

inline ConjugateRegression make_conjugate_regression(std::uint64_t seed, int n = 60) {
  Rng rng(seed);
  std::normal_distribution<double> n01(0, 1);
  ConjugateRegression c;
  const VectorXd beta = (VectorXd(3) << 1.0, -2.0, 0.5).finished();
  c.x = MatrixXd(n, 3);
  c.y = VectorXd(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) c.x(i, j) = n01(rng);
    c.y[i] = c.x.row(i).dot(beta) + std::sqrt(c.noise_var) * n01(rng);
  }
  const MatrixXd prec = c.x.transpose() * c.x / c.noise_var + MatrixXd::Identity(3, 3) / c.prior_var;
  c.post_cov = prec.inverse();
  c.post_mean = c.post_cov * c.x.transpose() * c.y / c.noise_var;
  return c;
}

}  // namespace ugraph::oracle
