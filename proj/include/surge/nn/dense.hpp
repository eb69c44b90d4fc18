#pragma once

#include "surge/core.hpp"

#include <string>
#include <vector>

namespace surge::nn {

enum class Activation { none, sigmoid };

template <typename Scalar>
MatrixT<Scalar> sigmoid(const MatrixT<Scalar>& a) {
  return a.unaryExpr([](Scalar v) { return Scalar(1) / (Scalar(1) + std::exp(-v)); });
}

/// Glorot-uniform block, the same scheme for every trainable matrix.
template <typename Scalar>
MatrixT<Scalar> glorot(Rng& rng, Index fan_in, Index fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  MatrixT<Scalar> m(fan_in, fan_out);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(rng.uniform(-limit, limit));
  return m;
}

/// Fully connected layer applied row-wise: y = act(x W + b).
template <typename Scalar = double>
struct DenseLayer {
  using Mat = MatrixT<Scalar>;

  Mat weights;  // in x out
  Mat bias;     // 1 x out
  Activation activation = Activation::none;

  struct Cache {
    Mat input;
    Mat output;
    bool filled = false;
  };

  static DenseLayer zeros(Index in, Index out, Activation act) {
    return DenseLayer{Mat::Zero(in, out), Mat::Zero(1, out), act};
  }

  static DenseLayer init(Index in, Index out, Activation act, Rng& rng) {
    return DenseLayer{glorot<Scalar>(rng, in, out), Mat::Zero(1, out), act};
  }

  Index in_size() const { return weights.rows(); }
  Index out_size() const { return weights.cols(); }

  Mat forward(const Mat& x) const {
    if (x.cols() != weights.rows()) {
      throw DimensionError("dense: input has " + std::to_string(x.cols()) + " columns, layer expects " +
                           std::to_string(weights.rows()));
    }
    if (bias.cols() != weights.cols()) throw DimensionError("dense: bias width does not match weights");
    Mat y = x * weights;
    y.rowwise() += bias.row(0);
    if (activation == Activation::sigmoid) y = sigmoid<Scalar>(y);
    return y;
  }

  Mat forward(const Mat& x, Cache& cache) const {
    Mat y = forward(x);
    cache.input = x;
    cache.output = y;
    cache.filled = true;
    return y;
  }

  /// Accumulates parameter gradients into `grads` and returns dL/dx.
  Mat backward(const Cache& cache, const Mat& dy, DenseLayer& grads) const {
    if (!cache.filled) throw StateError("dense: backward called without a cached forward pass");
    if (dy.rows() != cache.output.rows() || dy.cols() != cache.output.cols()) {
      throw DimensionError("dense: upstream gradient shape mismatch");
    }
    Mat da = dy;
    if (activation == Activation::sigmoid) {
      da = dy.cwiseProduct(cache.output.cwiseProduct((Mat::Ones(dy.rows(), dy.cols()) - cache.output)));
    }
    grads.weights.noalias() += cache.input.transpose() * da;
    grads.bias += da.colwise().sum();
    return da * weights.transpose();
  }

  DenseLayer zeros_like() const { return zeros(in_size(), out_size(), activation); }

  std::vector<Mat*> params() { return {&weights, &bias}; }
  std::vector<const Mat*> params() const { return {&weights, &bias}; }
  static std::vector<std::string> param_names() { return {"W", "b"}; }
};

}  // namespace surge::nn
