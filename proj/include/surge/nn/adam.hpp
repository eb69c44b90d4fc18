#pragma once

#include "surge/core.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace surge::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. Moment buffers are created lazily on the first
/// step and must keep matching their parameters afterwards.
template <typename Scalar = double>
class Adam {
 public:
  using Mat = MatrixT<Scalar>;

  explicit Adam(AdamConfig config = {}) : config_(config) {
    if (!(config.beta1 > 0.0 && config.beta1 < 1.0 && config.beta2 > 0.0 && config.beta2 < 1.0)) {
      throw DataError("adam: betas must lie in (0, 1)");
    }
    if (!(config.learning_rate > 0.0) || !(config.epsilon > 0.0)) throw DataError("adam: lr and epsilon must be positive");
  }

  const AdamConfig& config() const { return config_; }
  std::uint64_t step_count() const { return step_; }

  void step(const std::vector<Mat*>& params, const std::vector<const Mat*>& grads) {
    if (params.size() != grads.size()) throw DimensionError("adam: parameter/gradient count mismatch");
    if (m_.empty()) {
      for (const Mat* p : params) {
        m_.push_back(Mat::Zero(p->rows(), p->cols()));
        v_.push_back(Mat::Zero(p->rows(), p->cols()));
      }
    }
    if (m_.size() != params.size()) throw DimensionError("adam: parameter count changed between steps");
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params[i]->rows() != grads[i]->rows() || params[i]->cols() != grads[i]->cols() ||
          params[i]->rows() != m_[i].rows() || params[i]->cols() != m_[i].cols()) {
        throw DimensionError("adam: shape mismatch for parameter " + std::to_string(i));
      }
    }

    ++step_;
    const Scalar b1 = static_cast<Scalar>(config_.beta1);
    const Scalar b2 = static_cast<Scalar>(config_.beta2);
    const Scalar c1 = Scalar(1) - static_cast<Scalar>(std::pow(config_.beta1, static_cast<double>(step_)));
    const Scalar c2 = Scalar(1) - static_cast<Scalar>(std::pow(config_.beta2, static_cast<double>(step_)));
    const Scalar lr = static_cast<Scalar>(config_.learning_rate);
    const Scalar eps = static_cast<Scalar>(config_.epsilon);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Mat& g = *grads[i];
      m_[i] = b1 * m_[i] + (Scalar(1) - b1) * g;
      v_[i] = b2 * v_[i] + (Scalar(1) - b2) * g.cwiseProduct(g);
      Mat& p = *params[i];
      for (Index k = 0; k < p.size(); ++k) {
        const Scalar mhat = m_[i].data()[k] / c1;
        const Scalar vhat = v_[i].data()[k] / c2;
        p.data()[k] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }

 private:
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<Mat> m_;
  std::vector<Mat> v_;
};

}  // namespace surge::nn
