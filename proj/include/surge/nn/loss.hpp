#pragma once

#include "surge/core.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <span>
#include <string>
#include <vector>

namespace surge::nn {

inline constexpr double kBceEpsilon = 1e-7;
inline constexpr double kMomentStdEpsilon = 1e-6;

namespace detail {
template <typename T>
void check_pair(std::span<const T> y, std::span<const T> yhat, const char* what) {
  if (y.size() != yhat.size()) {
    throw DimensionError(std::string(what) + ": length mismatch (" + std::to_string(y.size()) + " vs " +
                         std::to_string(yhat.size()) + ")");
  }
  if (y.empty()) throw DataError(std::string(what) + ": empty input");
}
}  // namespace detail

template <std::floating_point T>
T mse(std::span<const T> y, std::span<const T> yhat) {
  detail::check_pair(y, yhat, "mse");
  T acc = 0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  return acc / static_cast<T>(y.size());
}

template <std::floating_point T>
T rmse(std::span<const T> y, std::span<const T> yhat) {
  return std::sqrt(mse(y, yhat));
}

template <std::floating_point T>
T mae(std::span<const T> y, std::span<const T> yhat) {
  detail::check_pair(y, yhat, "mae");
  T acc = 0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += std::abs(y[i] - yhat[i]);
  return acc / static_cast<T>(y.size());
}

/// Binary cross-entropy with predictions clamped to [eps, 1 - eps].
template <std::floating_point T>
T bce(std::span<const T> y, std::span<const T> yhat) {
  detail::check_pair(y, yhat, "bce");
  T acc = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const T p = std::clamp<T>(yhat[i], T(kBceEpsilon), T(1) - T(kBceEpsilon));
    acc += y[i] * std::log(p) + (T(1) - y[i]) * std::log(T(1) - p);
  }
  return -acc / static_cast<T>(y.size());
}

inline double mse(const std::vector<double>& y, const std::vector<double>& yhat) {
  return mse(std::span<const double>(y), std::span<const double>(yhat));
}
inline double rmse(const std::vector<double>& y, const std::vector<double>& yhat) {
  return rmse(std::span<const double>(y), std::span<const double>(yhat));
}
inline double mae(const std::vector<double>& y, const std::vector<double>& yhat) {
  return mae(std::span<const double>(y), std::span<const double>(yhat));
}
inline double bce(const std::vector<double>& y, const std::vector<double>& yhat) {
  return bce(std::span<const double>(y), std::span<const double>(yhat));
}

struct LossGrad {
  double value = 0.0;
  Matrix grad;  // dL/d(prediction)
};

inline std::span<const double> flat(const Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }

/// MSE over every entry of `pred` vs `target`.
inline LossGrad mse_grad(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw DimensionError("mse: shape mismatch " + shape_str(pred) + " vs " + shape_str(target));
  }
  const double n = static_cast<double>(pred.size());
  Matrix diff = pred - target;
  return {diff.squaredNorm() / n, diff * (2.0 / n)};
}

/// BCE of probabilities `p` against constant label `label`; the gradient is
/// zero where the clamp is active.
inline LossGrad bce_grad(const Matrix& p, double label) {
  if (p.size() == 0) throw DataError("bce: empty input");
  const double n = static_cast<double>(p.size());
  LossGrad out{0.0, Matrix::Zero(p.rows(), p.cols())};
  for (Index i = 0; i < p.size(); ++i) {
    const double raw = p.data()[i];
    const double q = std::clamp(raw, kBceEpsilon, 1.0 - kBceEpsilon);
    out.value -= label * std::log(q) + (1.0 - label) * std::log(1.0 - q);
    if (raw > kBceEpsilon && raw < 1.0 - kBceEpsilon) out.grad.data()[i] = (-label / q + (1.0 - label) / (1.0 - q)) / n;
  }
  out.value /= n;
  return out;
}

struct MomentLoss {
  double value = 0.0;
  std::vector<Matrix> grad;  // dL/d(generated sample), one per sample
};

/// Distribution matching between two batches of equally shaped matrices:
/// mean over cells of |mean_real - mean_gen| + |std_real - std_gen|, with
/// statistics taken across the batch and std = sqrt(var + 1e-6).
inline MomentLoss moment_loss_grad(const std::vector<Matrix>& real, const std::vector<Matrix>& gen) {
  if (real.empty() || gen.empty()) throw DataError("moment loss: empty batch");
  const Index rows = real.front().rows();
  const Index cols = real.front().cols();
  for (const auto& m : real) require_shape(m, rows, cols, "moment loss (real)");
  for (const auto& m : gen) require_shape(m, rows, cols, "moment loss (generated)");

  auto stats = [&](const std::vector<Matrix>& batch) {
    const double n = static_cast<double>(batch.size());
    Matrix mean = Matrix::Zero(rows, cols);
    for (const auto& m : batch) mean += m;
    mean /= n;
    Matrix var = Matrix::Zero(rows, cols);
    for (const auto& m : batch) var.array() += (m - mean).array().square();
    var /= n;
    Matrix sd = (var.array() + kMomentStdEpsilon).sqrt().matrix();
    return std::pair{mean, sd};
  };
  const auto [mr, sr] = stats(real);
  const auto [mg, sg] = stats(gen);

  const double cells = static_cast<double>(rows * cols);
  const double n = static_cast<double>(gen.size());
  MomentLoss out;
  out.value = ((mr - mg).array().abs() + (sr - sg).array().abs()).sum() / cells;

  auto sign = [](double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); };
  const Matrix dmean = (mg - mr).unaryExpr(sign) / cells;
  const Matrix dsd = (sg - sr).unaryExpr(sign) / cells;
  out.grad.reserve(gen.size());
  for (const auto& m : gen) {
    // d sd / d x = (x - mean) / (n * sd)
    Matrix g = dmean / n + dsd.cwiseProduct((m - mg).cwiseQuotient(sg)) / n;
    out.grad.push_back(std::move(g));
  }
  return out;
}

inline double moment_loss(const std::vector<Matrix>& real, const std::vector<Matrix>& gen) {
  return moment_loss_grad(real, gen).value;
}

}  // namespace surge::nn
