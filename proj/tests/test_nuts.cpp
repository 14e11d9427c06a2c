#include <cmath>

#include <gtest/gtest.h>

#include "support.hpp"
#include "ugraph/nuts.hpp"

using namespace ugraph;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct StdNormal {
  double operator()(const VectorXd& q, VectorXd& g) const {
    g = -q;
    return -0.5 * q.squaredNorm();
  }
};

// Anisotropic Gaussian with known precision.
struct Quadratic {
  VectorXd precision;
  double operator()(const VectorXd& q, VectorXd& g) const {
    g = -precision.cwiseProduct(q);
    return -0.5 * q.dot(precision.cwiseProduct(q));
  }
};

}  // namespace

TEST(Leapfrog, Reversible) {
  Quadratic q{VectorXd::LinSpaced(4, 0.5, 3.0)};
  nuts::Target<Quadratic> target(q);
  nuts::PhasePoint z;
  z.q = VectorXd::LinSpaced(4, -1.0, 1.5);
  z.p = VectorXd::LinSpaced(4, 0.7, -0.4);
  z.logp = target(z.q, z.grad);
  nuts::PhasePoint w = z;
  for (int i = 0; i < 25; ++i) w = nuts::leapfrog(target, w, 0.1);
  w.p = -w.p;
  for (int i = 0; i < 25; ++i) w = nuts::leapfrog(target, w, 0.1);
  EXPECT_LT((w.q - z.q).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((w.p + z.p).cwiseAbs().maxCoeff(), 1e-8);
}

namespace {

template <class F>
std::vector<double> halving_ratios(const F& f, const VectorXd& q, const VectorXd& p, double eps0, int n) {
  nuts::Target<F> target(f);
  nuts::PhasePoint z;
  z.q = q;
  z.p = p;
  z.logp = target(z.q, z.grad);
  const double h0 = z.hamiltonian();
  std::vector<double> ratios;
  double prev = 0;
  for (int k = 0; k < n; ++k) {
    const double err = std::abs(nuts::leapfrog(target, z, eps0 / std::pow(2.0, k)).hamiltonian() - h0);
    if (k > 0) ratios.push_back(prev / err);
    prev = err;
  }
  return ratios;
}

}  // namespace

TEST(Leapfrog, EnergyErrorDropsEightfoldPerHalving) {
  const Quadratic q{(VectorXd(3) << 0.5, 1.0, 3.0).finished()};
  const auto ratios = halving_ratios(q, (VectorXd(3) << -1.0, 0.25, 1.5).finished(),
                                     (VectorXd(3) << 0.7, 0.15, -0.4).finished(), 0.2, 6);
  for (double r : ratios) EXPECT_GE(r, 8.0);
}

TEST(Leapfrog, EnergyErrorIsThirdOrderOnNonGaussianTarget) {
  // Higher-order terms make the finite-step ratio approach 8 from below here.
  auto quartic = [](const VectorXd& q, VectorXd& g) {
    g = -q - q.array().cube().matrix();
    return -0.5 * q.squaredNorm() - 0.25 * q.array().pow(4).sum();
  };
  const auto ratios = halving_ratios(quartic, VectorXd::LinSpaced(3, 0.3, 1.1), VectorXd::LinSpaced(3, -0.8, 0.5),
                                     0.2, 8);
  EXPECT_NEAR(std::log2(ratios.back()), 3.0, 0.05);
}

TEST(Nuts, StandardGaussian5D) {
  Rng rng(2);
  nuts::Config cfg;
  cfg.n_samples = 1000;
  cfg.n_warmup = 500;
  const auto res = nuts::sample(StdNormal{}, VectorXd::Constant(5, 2.0), cfg, rng);
  ASSERT_EQ(res.draws.size(), 1000u);
  for (int d = 0; d < 5; ++d) {
    double m = 0, s = 0;
    for (const auto& q : res.draws) m += q[d] / 1000.0;
    for (const auto& q : res.draws) s += (q[d] - m) * (q[d] - m) / 999.0;
    EXPECT_NEAR(m, 0.0, 0.1) << "dim " << d;
    EXPECT_NEAR(s, 1.0, 0.15) << "dim " << d;
  }
  EXPECT_EQ(res.diagnostics.divergences, 0);
  EXPECT_GT(res.diagnostics.mean_accept_stat, 0.6);
}

TEST(Nuts, ShiftedScaledGaussianSeparateCallables) {
  Rng rng(5);
  nuts::Config cfg;
  cfg.n_samples = 2000;
  cfg.n_warmup = 300;
  auto logp = [](const VectorXd& q) { return -0.5 * std::pow((q[0] - 3.0) / 2.0, 2); };
  auto grad = [](const VectorXd& q) { return VectorXd::Constant(1, -(q[0] - 3.0) / 4.0); };
  const auto res = nuts::sample(logp, grad, VectorXd::Zero(1), cfg, rng);
  double m = 0, s = 0;
  for (const auto& q : res.draws) m += q[0] / res.draws.size();
  for (const auto& q : res.draws) s += (q[0] - m) * (q[0] - m) / (res.draws.size() - 1);
  EXPECT_NEAR(m, 3.0, 0.2);
  EXPECT_NEAR(std::sqrt(s), 2.0, 0.3);
}

TEST(Nuts, ConjugateLinearRegression) {
  const auto problem = oracle::make_conjugate_regression(11);
  Rng rng(3);
  nuts::Config cfg;
  cfg.n_samples = 2000;
  cfg.n_warmup = 500;
  const auto res = nuts::sample(problem, VectorXd::Zero(3), cfg, rng);
  const auto m = oracle::moments(res.draws);
  for (int j = 0; j < 3; ++j) {
    EXPECT_LT(std::abs(m.mean[j] - problem.post_mean[j]), 3.0 * oracle::batch_mcse(res.draws, j)) << "coef " << j;
    EXPECT_NEAR(m.var[j], problem.post_cov(j, j), 0.2 * problem.post_cov(j, j)) << "coef " << j;
  }
}

TEST(Nuts, DeterministicUnderSeed) {
  nuts::Config cfg;
  cfg.n_samples = 50;
  cfg.n_warmup = 20;
  Rng a(9), b(9);
  const auto ra = nuts::sample(StdNormal{}, VectorXd::Ones(3), cfg, a);
  const auto rb = nuts::sample(StdNormal{}, VectorXd::Ones(3), cfg, b);
  for (std::size_t i = 0; i < ra.draws.size(); ++i) EXPECT_EQ(ra.draws[i], rb.draws[i]);
}

TEST(Nuts, InvalidInputs) {
  Rng rng(1);
  nuts::Config cfg;
  cfg.n_samples = 0;
  EXPECT_THROW(nuts::sample(StdNormal{}, VectorXd::Zero(2), cfg, rng), std::invalid_argument);
  cfg = {};
  auto bad = [](const VectorXd& q, VectorXd& g) {
    g = VectorXd::Zero(q.size());
    return std::nan("");
  };
  EXPECT_THROW(nuts::sample(bad, VectorXd::Zero(2), cfg, rng), NumericalError);
}

TEST(Nuts, AllDivergentWarmupIsAnError) {
  // Finite only at the start point: every trajectory leaves the support.
  auto spike = [](const VectorXd& q, VectorXd& g) {
    g = VectorXd::Zero(q.size());
    return q.norm() < 1e-300 ? 0.0 : -std::numeric_limits<double>::infinity();
  };
  Rng rng(4);
  nuts::Config cfg;
  cfg.n_warmup = 10;
  cfg.n_samples = 5;
  cfg.init_step_size = 0.1;
  EXPECT_THROW(nuts::sample(spike, VectorXd::Zero(2), cfg, rng), NumericalError);
}
