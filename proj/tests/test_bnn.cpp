#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "support.hpp"
#include "ugraph/bnn.hpp"

using namespace ugraph;

namespace {

BnnModelSpec plain_spec(std::vector<int> hidden = {4}) {
  return {MlpArchitecture{kBnnInputDim, std::move(hidden), kComDim}, false};
}

// Log density of N(x; m, s) written out independently of the library.
double normal_logpdf(double x, double m, double s) {
  return -0.5 * std::log(2 * std::numbers::pi) - std::log(s) - 0.5 * (x - m) * (x - m) / (s * s);
}

PosteriorSamples identity_posterior(const BnnModelSpec& spec, std::vector<VectorXd> samples, Vec3 sigma) {
  PosteriorSamples ps;
  ps.spec = spec;
  ps.normalization.input = {VectorXd::Zero(kBnnInputDim), VectorXd::Ones(kBnnInputDim)};
  ps.normalization.output = {Vec3(0.01, -0.02, 0.0), Vec3(0.05, 0.05, 0.1)};
  for (auto& s : samples) {
    ps.samples.push_back(std::move(s));
    ps.obs_sigma.push_back(sigma);
  }
  return ps;
}

}  // namespace

TEST(LogPosterior, EmptyDatasetIsPriorOnly) {
  const auto spec = plain_spec();
  Rng rng(1);
  const VectorXd center = init_weights(spec.arch, rng);
  const VectorXd w = center + VectorXd::Constant(center.size(), 0.1);
  const BnnPrior prior{center, 0.5, 1.0};
  const Vec3 sigma(0.7, 1.1, 1.3);
  double expected = 0;
  for (Eigen::Index i = 0; i < w.size(); ++i) expected += normal_logpdf(w[i], center[i], 0.5);
  for (int k = 0; k < 3; ++k) expected += std::log(2.0) + normal_logpdf(sigma[k], 0, 1.0);
  const RegressionData empty{MatrixXd(kBnnInputDim, 0), MatrixXd(kComDim, 0)};
  EXPECT_NEAR(log_posterior(spec, prior, empty, w, sigma), expected, 1e-10);
}

TEST(LogPosterior, PerfectFitLikelihoodTerm) {
  const auto spec = plain_spec();
  Rng rng(2);
  const VectorXd w = init_weights(spec.arch, rng);
  RegressionData one{VectorXd::LinSpaced(kBnnInputDim, -1, 1), MatrixXd()};
  one.targets = forward_batch(spec.arch, w, one.inputs).output();
  const auto parts = detail::evaluate_log_posterior(spec, {w, 0.5, 1.0}, one, w, Vec3::Ones(), nullptr);
  EXPECT_NEAR(parts.likelihood, 3 * -0.5 * std::log(2 * std::numbers::pi), 1e-14);
}

TEST(LogPosterior, DuplicatingDataDoublesLikelihood) {
  auto p = oracle::random_problem(5);
  while (p.data.size() == 0) p = oracle::random_problem(p.state.size() + 17);
  const VectorXd w = p.state.head(p.spec.weight_count());
  const Vec3 sigma = Vec3(p.state.tail(3)).array().exp();
  RegressionData doubled{MatrixXd(kBnnInputDim, 2 * p.data.size()), MatrixXd(kComDim, 2 * p.data.size())};
  doubled.inputs << p.data.inputs, p.data.inputs;
  doubled.targets << p.data.targets, p.data.targets;
  const double single = detail::evaluate_log_posterior(p.spec, p.prior, p.data, w, sigma, nullptr).likelihood;
  const double twice = detail::evaluate_log_posterior(p.spec, p.prior, doubled, w, sigma, nullptr).likelihood;
  EXPECT_NEAR(twice, 2 * single, 1e-10 * std::abs(single));
}

TEST(LogPosterior, NonFiniteIsNumericalError) {
  const auto spec = plain_spec();
  Rng rng(3);
  VectorXd w = init_weights(spec.arch, rng);
  const BnnPrior prior{w, 0.5, 1.0};
  w[0] = std::numeric_limits<double>::infinity();
  const RegressionData d{VectorXd::Ones(kBnnInputDim), Vec3::Zero()};
  EXPECT_THROW(log_posterior(spec, prior, d, w, Vec3::Ones()), NumericalError);
  EXPECT_THROW(log_posterior(spec, prior, d, prior.center, Vec3(1, 0, 1)), std::domain_error);
}

TEST(GradLogPosterior, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = oracle::random_problem(1000 + seed);
    const auto check = oracle::check_gradient(p);
    EXPECT_EQ(check.entries, p.spec.weight_count() + 3);
    EXPECT_LT(check.worst_relative, 1e-4) << "problem " << seed;
  }
}

TEST(GradLogPosterior, ZeroResidualAtPriorCenterHasZeroWeightGradient) {
  const auto spec = plain_spec({3, 2});
  Rng rng(4);
  const VectorXd w = init_weights(spec.arch, rng);
  RegressionData d{MatrixXd::Random(kBnnInputDim, 5), MatrixXd()};
  d.targets = forward_batch(spec.arch, w, d.inputs).output();
  const VectorXd g = grad_log_posterior(spec, {w, 0.5, 1.0}, d, pack_state(w, Vec3::Ones()));
  EXPECT_LT(g.head(spec.weight_count()).cwiseAbs().maxCoeff(), 1e-14);
  const RegressionData empty{MatrixXd(kBnnInputDim, 0), MatrixXd(kComDim, 0)};
  const VectorXd g0 = grad_log_posterior(spec, {w, 0.5, 1.0}, empty, pack_state(w, Vec3::Ones()));
  EXPECT_EQ(g0.head(spec.weight_count()), VectorXd::Zero(spec.weight_count()));
}

TEST(BnnDensity, AgreesWithSeparateFunctions) {
  const auto p = oracle::random_problem(77);
  const BnnDensity density{p.spec, p.prior, p.data};
  VectorXd g;
  const double v = density(p.state, g);
  EXPECT_NEAR(v, log_posterior_unconstrained(p.spec, p.prior, p.data, p.state), 1e-12);
  EXPECT_TRUE(g.isApprox(grad_log_posterior(p.spec, p.prior, p.data, p.state), 1e-14));
}

TEST(Pretrain, LearnsLinearTarget) {
  Rng data_rng(6);
  const MatrixXd a = MatrixXd::Random(kComDim, kBnnInputDim);
  RegressionData d{MatrixXd::Random(kBnnInputDim, 400), MatrixXd()};
  d.targets = a * d.inputs;
  Rng rng(7);
  const MapResult r = pretrain_map(plain_spec({32}), d, {400, 32, 3e-3}, rng);
  EXPECT_LT(r.mse, 1e-3);
}

TEST(Pretrain, ConstantTargetConvergesToBias) {
  RegressionData d{MatrixXd::Random(kBnnInputDim, 64), MatrixXd()};
  d.targets = Vec3(0.3, -1.2, 0.8).replicate(1, 64);
  Rng rng(8);
  const auto spec = plain_spec({4});
  const MapResult r = pretrain_map(spec, d, {2000, 16, 3e-3}, rng);
  EXPECT_LT(r.mse, 1e-4);
  EXPECT_TRUE(forward(spec.arch, r.weights, VectorXd::Zero(kBnnInputDim)).isApprox(Vec3(0.3, -1.2, 0.8), 1e-2));
}

TEST(Pretrain, NoiseHeadStartsNeutralAndSeedReproducible) {
  RegressionData d{MatrixXd::Random(kBnnInputDim, 50), MatrixXd::Random(kComDim, 50)};
  const BnnModelSpec spec{MlpArchitecture{kBnnInputDim, {6}, 2 * kComDim}, true};
  Rng a(9), b(9);
  const MapResult ra = pretrain_map(spec, d, {5, 16, 1e-3}, a);
  const MapResult rb = pretrain_map(spec, d, {5, 16, 1e-3}, b);
  EXPECT_EQ(ra.weights, rb.weights);
  EXPECT_EQ(ra.mse, rb.mse);
  EXPECT_THROW(pretrain_map(spec, {MatrixXd(kBnnInputDim, 0), MatrixXd(kComDim, 0)}, {}, a), std::invalid_argument);
  const MapResult untrained = pretrain_map(spec, d, {0, 16, 1e-3}, a);
  EXPECT_EQ(forward_batch(spec.arch, untrained.weights, d.inputs).output().bottomRows(kComDim),
            MatrixXd::Zero(kComDim, 50));
}

TEST(Predict, SingleSampleNoNoiseHitsFloor) {
  const auto spec = plain_spec({3});
  Rng rng(10);
  const VectorXd w = init_weights(spec.arch, rng);
  const auto ps = identity_posterior(spec, {w}, Vec3::Zero());
  const Wrench wr{{0.1, 0.2, -2.0}, {0.01, -0.02, 0.0}};
  const WristOrientation o{0.2, -0.3};
  const auto pred = predict(ps, wr, o);
  const Vec3 expected = ps.normalization.output.invert(forward(spec.arch, w, bnn_features(wr, o)));
  EXPECT_TRUE(pred.mean.isApprox(expected, 1e-14));
  EXPECT_EQ(pred.std, Vec3::Constant(kStdFloor));
}

TEST(Predict, IdenticalSamplesGiveNoiseOnlyStd) {
  const auto spec = plain_spec({3});
  Rng rng(11);
  const VectorXd w = init_weights(spec.arch, rng);
  const Vec3 sigma(0.2, 0.4, 0.6);
  const auto ps = identity_posterior(spec, {w, w, w}, sigma);
  const auto pred = predict(ps, {{0, 0, -2}, {0.01, 0.01, 0}}, {});
  EXPECT_TRUE(pred.std.isApprox(sigma.cwiseProduct(ps.normalization.output.std), 1e-12));
}

TEST(Predict, SpreadAddsToNoise) {
  const auto spec = plain_spec({3});
  Rng rng(12);
  const VectorXd w1 = init_weights(spec.arch, rng), w2 = init_weights(spec.arch, rng);
  const Vec3 sigma(0.1, 0.1, 0.1);
  const auto ps = identity_posterior(spec, {w1, w2}, sigma);
  const VectorXd x = bnn_features({{0, 0, -2}, {0.01, 0.01, 0}}, {});
  const Vec3 m1 = ps.normalization.output.invert(forward(spec.arch, w1, x));
  const Vec3 m2 = ps.normalization.output.invert(forward(spec.arch, w2, x));
  const Vec3 spread = (m1 - m2).cwiseAbs2() / 4.0;
  const Vec3 noise = sigma.cwiseProduct(ps.normalization.output.std).cwiseAbs2();
  const auto pred = predict(ps, {{0, 0, -2}, {0.01, 0.01, 0}}, {});
  EXPECT_TRUE(pred.mean.isApprox((m1 + m2) / 2, 1e-14));
  EXPECT_TRUE(pred.std.isApprox((spread + noise).cwiseSqrt(), 1e-10));
  EXPECT_THROW(predict(identity_posterior(spec, {}, sigma), {}, {}), std::invalid_argument);
}

TEST(TrainBnn, TinyRunIsDeterministic) {
  DatasetConfig dc;
  dc.grasps = 4;
  dc.orientations_per_grasp = 5;
  const auto records = generate_dataset(dc, 3);
  BnnConfig cfg;
  cfg.hidden = {4};
  cfg.samples = 5;
  cfg.warmup = 5;
  cfg.epochs = 3;
  cfg.max_tree_depth = 4;
  const auto a = train_bnn(records, cfg, 3), b = train_bnn(records, cfg, 3);
  ASSERT_EQ(a.samples.size(), 5u);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i], b.samples[i]);
    EXPECT_EQ(a.obs_sigma[i], b.obs_sigma[i]);
    EXPECT_GT(a.obs_sigma[i].minCoeff(), 0.0);
  }
  EXPECT_THROW(train_bnn({}, cfg, 3), std::invalid_argument);
}
