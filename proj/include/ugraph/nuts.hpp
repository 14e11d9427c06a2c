#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ugraph/rng.hpp"
#include "ugraph/types.hpp"

// No-U-Turn sampler with multinomial trajectory sampling, identity mass matrix
// and dual-averaging step-size adaptation during warmup.

namespace ugraph::nuts {

using Eigen::VectorXd;

struct Config {
  int n_samples = 200;
  int n_warmup = 50;
  double target_accept = 0.8;
  int max_depth = 10;
  double max_energy_error = 1000.0;
  /// Initial step size; <= 0 selects one heuristically from the start point.
  double init_step_size = 0.0;
};

struct Diagnostics {
  int divergences = 0;         // post-warmup
  int warmup_divergences = 0;
  double mean_accept_stat = 0; // post-warmup
  double step_size = 0;
  double mean_tree_depth = 0;  // post-warmup
  long long gradient_evals = 0;
};

struct Result {
  std::vector<VectorXd> draws;
  std::vector<double> log_density;
  Diagnostics diagnostics;
};

struct PhasePoint {
  VectorXd q;
  VectorXd p;
  VectorXd grad;
  double logp = 0.0;

  double hamiltonian() const { return -logp + 0.5 * p.squaredNorm(); }
};

/// Wraps a callable `double f(const VectorXd& q, VectorXd& grad)`. Evaluations that
/// throw NumericalError or return non-finite values read as log density -inf.
template <class F>
class Target {
 public:
  explicit Target(const F& f) : f_(f) {}

  double operator()(const VectorXd& q, VectorXd& grad) {
    ++evals_;
    double lp;
    try {
      lp = f_(q, grad);
    } catch (const NumericalError&) {
      lp = -std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(lp) || !grad.allFinite()) {
      grad.setZero(q.size());
      return -std::numeric_limits<double>::infinity();
    }
    return lp;
  }

  long long evals() const { return evals_; }

 private:
  const F& f_;
  long long evals_ = 0;
};

/// One velocity-Verlet step; a negative step size integrates backwards.
template <class F>
PhasePoint leapfrog(Target<F>& target, const PhasePoint& z, double step) {
  PhasePoint next;
  next.p = z.p + 0.5 * step * z.grad;
  next.q = z.q + step * next.p;
  next.logp = target(next.q, next.grad);
  next.p += 0.5 * step * next.grad;
  return next;
}

inline double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

/// Classic criterion: the trajectory has turned back on itself once either
/// endpoint momentum points against the endpoint displacement.
inline bool is_uturn(const PhasePoint& minus, const PhasePoint& plus) {
  const VectorXd span = plus.q - minus.q;
  return span.dot(plus.p) < 0.0 || span.dot(minus.p) < 0.0;
}

struct Subtree {
  PhasePoint minus;
  PhasePoint plus;
  VectorXd proposal;
  VectorXd proposal_grad;
  double proposal_logp = 0.0;
  double log_weight = -std::numeric_limits<double>::infinity();  // log sum exp(H0 - H)
  double sum_accept = 0.0;
  int n_leaves = 0;
  bool diverged = false;
  bool uturn = false;

  bool valid() const { return !diverged && !uturn; }
};

template <class F>
class Sampler {
 public:
  Sampler(const F& f, const Config& cfg, Rng& rng) : target_(f), cfg_(cfg), rng_(rng) {}

  Result run(const VectorXd& init) {
    validate();
    PhasePoint z;
    z.q = init;
    z.logp = target_(z.q, z.grad);
    if (!std::isfinite(z.logp)) throw NumericalError("non-finite initial log density");

    double step = cfg_.init_step_size > 0.0 ? cfg_.init_step_size : find_initial_step(z);
    // Dual averaging state.
    const double mu = std::log(10.0 * step);
    const double gamma = 0.05, t0 = 10.0, kappa = 0.75;
    double h_bar = 0.0, log_step_bar = 0.0;

    Result result;
    result.draws.reserve(static_cast<std::size_t>(cfg_.n_samples));
    result.log_density.reserve(static_cast<std::size_t>(cfg_.n_samples));
    Diagnostics& diag = result.diagnostics;
    double accept_total = 0.0, depth_total = 0.0;

    for (int it = 0; it < cfg_.n_warmup + cfg_.n_samples; ++it) {
      const bool warmup = it < cfg_.n_warmup;
      const Transition t = transition(z, step);
      z.q = t.q;
      z.logp = t.logp;
      z.grad = t.grad;
      if (warmup) {
        if (t.diverged) ++diag.warmup_divergences;
        const double m = it + 1.0;
        h_bar = (1.0 - 1.0 / (m + t0)) * h_bar + (cfg_.target_accept - t.accept_stat) / (m + t0);
        const double log_step = mu - std::sqrt(m) / gamma * h_bar;
        const double w = std::pow(m, -kappa);
        log_step_bar = w * log_step + (1.0 - w) * log_step_bar;
        step = std::exp(log_step);
        if (it + 1 == cfg_.n_warmup) {
          if (diag.warmup_divergences == cfg_.n_warmup)
            throw NumericalError("every warmup transition diverged (" +
                                 std::to_string(diag.warmup_divergences) + " of " +
                                 std::to_string(cfg_.n_warmup) + "); last step size " +
                                 std::to_string(step));
          step = std::exp(log_step_bar);
        }
      } else {
        if (t.diverged) ++diag.divergences;
        accept_total += t.accept_stat;
        depth_total += t.depth;
        result.draws.push_back(z.q);
        result.log_density.push_back(z.logp);
      }
    }
    diag.step_size = step;
    diag.mean_accept_stat = accept_total / cfg_.n_samples;
    diag.mean_tree_depth = depth_total / cfg_.n_samples;
    diag.gradient_evals = target_.evals();
    return result;
  }

 private:
  struct Transition {
    VectorXd q;
    VectorXd grad;
    double logp;
    double accept_stat;
    int depth;
    bool diverged;
  };

  void validate() const {
    if (cfg_.n_samples < 1) throw std::invalid_argument("n_samples must be at least 1");
    if (cfg_.n_warmup < 0) throw std::invalid_argument("n_warmup must be non-negative");
    if (cfg_.max_depth < 1) throw std::invalid_argument("max_depth must be at least 1");
    if (!(cfg_.target_accept > 0.0 && cfg_.target_accept < 1.0))
      throw std::invalid_argument("target_accept must lie in (0, 1)");
  }

  VectorXd momentum(Eigen::Index n) {
    VectorXd p(n);
    for (Eigen::Index i = 0; i < n; ++i) p[i] = normal_(rng_);
    return p;
  }

  double uniform() { return uniform_(rng_); }

  double find_initial_step(const PhasePoint& start) {
    double step = 1.0;
    PhasePoint z = start;
    z.p = momentum(z.q.size());
    const double h0 = z.hamiltonian();
    auto log_ratio = [&](double eps) {
      const PhasePoint next = leapfrog(target_, z, eps);
      const double d = h0 - next.hamiltonian();
      return std::isfinite(d) ? d : -std::numeric_limits<double>::infinity();
    };
    double lr = log_ratio(step);
    const double direction = lr > std::log(0.5) ? 1.0 : -1.0;
    for (int i = 0; i < 100; ++i) {
      if (direction > 0 ? !(lr > std::log(0.5)) : !(lr < std::log(0.5))) break;
      step *= std::pow(2.0, direction);
      lr = log_ratio(step);
    }
    return step;
  }

  Subtree leaf(const PhasePoint& from, double step, double h0) {
    Subtree t;
    PhasePoint next = leapfrog(target_, from, step);
    double h = next.hamiltonian();
    if (!std::isfinite(h)) h = std::numeric_limits<double>::infinity();
    t.diverged = (h - h0) > cfg_.max_energy_error;
    t.sum_accept = std::min(1.0, std::exp(h0 - h));
    t.n_leaves = 1;
    t.log_weight = h0 - h;
    t.proposal = next.q;
    t.proposal_grad = next.grad;
    t.proposal_logp = next.logp;
    t.minus = next;
    t.plus = std::move(next);
    return t;
  }

  /// Builds 2^depth leapfrog steps outward from `from` in direction `dir`.
  Subtree build(const PhasePoint& from, int dir, int depth, double step, double h0) {
    if (depth == 0) return leaf(from, dir * step, h0);
    Subtree inner = build(from, dir, depth - 1, step, h0);
    if (!inner.valid()) return inner;
    Subtree outer = build(dir > 0 ? inner.plus : inner.minus, dir, depth - 1, step, h0);
    inner.sum_accept += outer.sum_accept;
    inner.n_leaves += outer.n_leaves;
    if (!outer.valid()) {
      inner.diverged = outer.diverged;
      inner.uturn = outer.uturn;
      return inner;
    }
    const double total = log_sum_exp(inner.log_weight, outer.log_weight);
    if (std::log(uniform()) < outer.log_weight - total) {
      inner.proposal = std::move(outer.proposal);
      inner.proposal_grad = std::move(outer.proposal_grad);
      inner.proposal_logp = outer.proposal_logp;
    }
    inner.log_weight = total;
    if (dir > 0)
      inner.plus = std::move(outer.plus);
    else
      inner.minus = std::move(outer.minus);
    inner.uturn = is_uturn(inner.minus, inner.plus);
    return inner;
  }

  Transition transition(const PhasePoint& current, double step) {
    PhasePoint z = current;
    z.p = momentum(z.q.size());
    const double h0 = z.hamiltonian();

    PhasePoint minus = z, plus = z;
    VectorXd proposal = z.q;
    VectorXd proposal_grad = z.grad;
    double proposal_logp = z.logp;
    double log_weight = 0.0;
    double sum_accept = 0.0;
    int n_leaves = 0;
    int depth = 0;
    bool diverged = false;

    while (depth < cfg_.max_depth) {
      const int dir = uniform() < 0.5 ? -1 : 1;
      Subtree sub = build(dir > 0 ? plus : minus, dir, depth, step, h0);
      sum_accept += sub.sum_accept;
      n_leaves += sub.n_leaves;
      ++depth;
      if (sub.diverged) {
        diverged = true;
        break;
      }
      if (sub.uturn) break;
      // Progressive sampling biased toward the new subtree.
      if (std::log(uniform()) < sub.log_weight - log_weight) {
        proposal = std::move(sub.proposal);
        proposal_grad = std::move(sub.proposal_grad);
        proposal_logp = sub.proposal_logp;
      }
      log_weight = log_sum_exp(log_weight, sub.log_weight);
      if (dir > 0)
        plus = std::move(sub.plus);
      else
        minus = std::move(sub.minus);
      if (is_uturn(minus, plus)) break;
    }

    Transition t;
    t.accept_stat = n_leaves > 0 ? sum_accept / n_leaves : 0.0;
    t.depth = depth;
    t.diverged = diverged;
    t.logp = proposal_logp;
    t.q = std::move(proposal);
    t.grad = std::move(proposal_grad);
    return t;
  }

  Target<F> target_;
  Config cfg_;
  Rng& rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Draws n_samples post-warmup states from exp(f). f(q, grad) returns the log density
/// and writes its gradient.
template <class F>
Result sample(const F& log_density_grad, const VectorXd& init, const Config& cfg, Rng& rng) {
  Sampler<F> sampler(log_density_grad, cfg, rng);
  return sampler.run(init);
}

/// Separate log-density and gradient callables.
template <class LogF, class GradF>
Result sample(const LogF& log_fn, const GradF& grad_fn, const VectorXd& init, const Config& cfg,
              Rng& rng) {
  auto combined = [&](const VectorXd& q, VectorXd& grad) {
    grad = grad_fn(q);
    return log_fn(q);
  };
  return sample(combined, init, cfg, rng);
}

}  // namespace ugraph::nuts
