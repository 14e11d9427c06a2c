#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ugraph/rng.hpp"

namespace ugraph {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using RowMajorMutMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

/// Fully connected network, ReLU on hidden layers and identity on the output.
struct MlpArchitecture {
  int input_dim = 8;
  std::vector<int> hidden = {32, 16};
  int output_dim = 3;

  int layer_count() const { return static_cast<int>(hidden.size()) + 1; }
  int layer_in(int l) const { return l == 0 ? input_dim : hidden[static_cast<std::size_t>(l - 1)]; }
  int layer_out(int l) const {
    return l == layer_count() - 1 ? output_dim : hidden[static_cast<std::size_t>(l)];
  }

  Eigen::Index param_count() const {
    Eigen::Index n = 0;
    for (int l = 0; l < layer_count(); ++l) n += Eigen::Index{layer_out(l)} * (layer_in(l) + 1);
    return n;
  }

  /// Offset of layer l's weight block; its bias follows the out x in weights.
  Eigen::Index layer_offset(int l) const {
    Eigen::Index n = 0;
    for (int k = 0; k < l; ++k) n += Eigen::Index{layer_out(k)} * (layer_in(k) + 1);
    return n;
  }

  void validate() const {
    if (input_dim < 1 || output_dim < 1) throw std::invalid_argument("layer sizes must be >= 1");
    for (int h : hidden)
      if (h < 1) throw std::invalid_argument("layer sizes must be >= 1");
  }

  friend bool operator==(const MlpArchitecture&, const MlpArchitecture&) = default;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
inline VectorXd init_weights(const MlpArchitecture& arch, Rng& rng) {
  VectorXd w(arch.param_count());
  for (int l = 0; l < arch.layer_count(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(arch.layer_in(l)));
    std::uniform_real_distribution<double> u(-bound, bound);
    const Eigen::Index off = arch.layer_offset(l);
    const Eigen::Index n = Eigen::Index{arch.layer_out(l)} * (arch.layer_in(l) + 1);
    for (Eigen::Index i = 0; i < n; ++i) w[off + i] = u(rng);
  }
  return w;
}

/// Post-activation values per layer; activations[0] is the input batch.
/// Columns are samples.
struct ForwardCache {
  std::vector<MatrixXd> activations;
  const MatrixXd& output() const { return activations.back(); }
};

inline void check_weights(const MlpArchitecture& arch, const VectorXd& w) {
  if (w.size() != arch.param_count()) throw std::invalid_argument("weight vector length mismatch");
}

inline ForwardCache forward_batch(const MlpArchitecture& arch, const VectorXd& w,
                                  const MatrixXd& inputs) {
  check_weights(arch, w);
  if (inputs.rows() != arch.input_dim) throw std::invalid_argument("input dimension mismatch");
  ForwardCache cache;
  cache.activations.reserve(static_cast<std::size_t>(arch.layer_count()) + 1);
  cache.activations.push_back(inputs);
  for (int l = 0; l < arch.layer_count(); ++l) {
    const int in = arch.layer_in(l), out = arch.layer_out(l);
    const Eigen::Index off = arch.layer_offset(l);
    RowMajorMap weight(w.data() + off, out, in);
    Eigen::Map<const VectorXd> bias(w.data() + off + Eigen::Index{out} * in, out);
    MatrixXd z = weight * cache.activations.back();
    z.colwise() += bias;
    if (l + 1 < arch.layer_count()) z = z.cwiseMax(0.0);
    cache.activations.push_back(std::move(z));
  }
  return cache;
}

inline VectorXd forward(const MlpArchitecture& arch, const VectorXd& w, const VectorXd& input) {
  return forward_batch(arch, w, input).output().col(0);
}

/// Reverse pass. d_output holds dLoss/dOutput with the same shape as the output batch.
inline VectorXd backward(const MlpArchitecture& arch, const VectorXd& w, const ForwardCache& cache,
                         const MatrixXd& d_output) {
  VectorXd grad = VectorXd::Zero(arch.param_count());
  MatrixXd delta = d_output;
  for (int l = arch.layer_count() - 1; l >= 0; --l) {
    const int in = arch.layer_in(l), out = arch.layer_out(l);
    const Eigen::Index off = arch.layer_offset(l);
    const MatrixXd& prev = cache.activations[static_cast<std::size_t>(l)];
    RowMajorMutMap(grad.data() + off, out, in).noalias() = delta * prev.transpose();
    grad.segment(off + Eigen::Index{out} * in, out) = delta.rowwise().sum();
    if (l > 0) {
      RowMajorMap weight(w.data() + off, out, in);
      MatrixXd upstream = weight.transpose() * delta;
      delta = (prev.array() > 0.0).select(upstream, 0.0);
    }
  }
  return grad;
}

/// Per-feature z-score parameters; features are rows.
struct Standardizer {
  VectorXd mean;
  VectorXd std;

  static Standardizer fit(const MatrixXd& data) {
    Standardizer s;
    const auto n = static_cast<double>(data.cols());
    s.mean = data.rowwise().mean();
    s.std.resize(data.rows());
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
      const double var = n > 1 ? (data.row(r).array() - s.mean[r]).square().sum() / n : 0.0;
      const double sd = std::sqrt(var);
      s.std[r] = sd > 1e-12 ? sd : 1.0;
    }
    return s;
  }

  MatrixXd apply(const MatrixXd& data) const {
    return (data.colwise() - mean).array().colwise() / std.array();
  }
  MatrixXd invert(const MatrixXd& data) const {
    return (data.array().colwise() * std.array()).matrix().colwise() + mean;
  }
};

/// Input and output scalers stored with every trained model.
struct NormalizationStats {
  Standardizer input;
  Standardizer output;
};

}  // namespace ugraph
