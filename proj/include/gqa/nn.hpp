#ifndef GQA_NN_HPP
#define GQA_NN_HPP

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gqa/common.hpp"
#include "gqa/rng.hpp"

namespace gqa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One fully connected layer, y = x W^T + b, shared across all rows
/// (points) of the input.
struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out

  int in_dim() const { return static_cast<int>(weight.cols()); }
  int out_dim() const { return static_cast<int>(weight.rows()); }
};

/// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
inline DenseLayer make_dense(int out, int in, Rng& rng) {
  DenseLayer layer;
  layer.weight.resize(out, in);
  layer.bias.resize(out);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  for (int r = 0; r < out; ++r) {
    for (int c = 0; c < in; ++c) layer.weight(r, c) = rng.uniform(-bound, bound);
  }
  for (int r = 0; r < out; ++r) layer.bias(r) = rng.uniform(-bound, bound);
  return layer;
}

inline DenseLayer zeros_like(const DenseLayer& layer) {
  DenseLayer z;
  z.weight = Matrix::Zero(layer.weight.rows(), layer.weight.cols());
  z.bias = Vector::Zero(layer.bias.size());
  return z;
}

/// Row-wise affine map over n inputs: (n x in) -> (n x out).
inline Matrix dense_forward(const DenseLayer& layer, const Matrix& inputs) {
  if (inputs.cols() != layer.weight.cols()) {
    throw DataError("dense_forward: input width " + std::to_string(inputs.cols()) +
                    " != layer fan-in " + std::to_string(layer.weight.cols()));
  }
  Matrix out = inputs * layer.weight.transpose();
  out.rowwise() += layer.bias.transpose();
  return out;
}

inline Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

inline double sigmoid(double x) {
  // Branch keeps exp() applied to a non-positive argument only.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Vector sigmoid(const Vector& x) {
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = sigmoid(x[i]);
  return out;
}

/// log(1 + e^x) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

struct MaxPoolResult {
  Vector values;                     // column-wise max
  std::vector<Eigen::Index> argmax;  // row attaining it; lowest row on ties
};

/// Column-wise max over the rows (points) of a feature matrix, keeping the
/// attaining row for gradient routing.
inline MaxPoolResult maxpool_points(const Matrix& features) {
  if (features.rows() < 1) throw DataError("maxpool_points on empty input");
  MaxPoolResult out;
  out.values = features.row(0).transpose();
  out.argmax.assign(features.cols(), 0);
  for (Eigen::Index r = 1; r < features.rows(); ++r) {
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      if (features(r, c) > out.values[c]) {
        out.values[c] = features(r, c);
        out.argmax[c] = r;
      }
    }
  }
  return out;
}

/// Reverse of maxpool_points: each column's upstream gradient lands whole on
/// its argmax row, so the per-column gradient mass is preserved exactly.
inline Matrix maxpool_backward(const std::vector<Eigen::Index>& argmax,
                               const Vector& upstream, Eigen::Index rows) {
  if (static_cast<Eigen::Index>(argmax.size()) != upstream.size()) {
    throw DataError("maxpool_backward: argmax/upstream size mismatch");
  }
  Matrix out = Matrix::Zero(rows, upstream.size());
  for (Eigen::Index c = 0; c < upstream.size(); ++c) {
    out(argmax[c], c) += upstream[c];
  }
  return out;
}

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam update of one tensor (weight matrix or bias vector).
/// `step` is the 1-based step count after this update.
template <class Tensor>
void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v,
                 const AdamConfig& cfg, double lr, long long step) {
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  param.array() -=
      lr * (m.array() / bias1) / ((v.array() / bias2).sqrt() + cfg.epsilon);
}

}  // namespace gqa

#endif  // GQA_NN_HPP
