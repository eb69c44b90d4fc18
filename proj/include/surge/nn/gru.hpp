#pragma once

#include "surge/nn/dense.hpp"

#include <string>
#include <vector>

namespace surge::nn {

enum class Direction { forward, bidirectional };
enum class ReturnMode { sequence, last };

/// One direction of a GRU with the reset gate applied before the candidate
/// projection:
///   z = sigmoid(x Wz + h Uz + bz)
///   r = sigmoid(x Wr + h Ur + br)
///   c = tanh(x Wh + (r * h) Uh + bh)
///   h' = (1 - z) * h + z * c
/// Row-vector convention, h0 = 0.
template <typename Scalar = double>
struct GruCell {
  using Mat = MatrixT<Scalar>;

  Mat Wz, Wr, Wh;  // input x hidden
  Mat Uz, Ur, Uh;  // hidden x hidden
  Mat bz, br, bh;  // 1 x hidden

  struct Cache {
    Mat x;       // T x in
    Mat h;       // (T+1) x hidden, row 0 is h0
    Mat z, r, c; // T x hidden
    bool filled = false;
  };

  static GruCell zeros(Index in, Index hidden) {
    GruCell g;
    g.Wz = g.Wr = g.Wh = Mat::Zero(in, hidden);
    g.Uz = g.Ur = g.Uh = Mat::Zero(hidden, hidden);
    g.bz = g.br = g.bh = Mat::Zero(1, hidden);
    return g;
  }

  static GruCell init(Index in, Index hidden, Rng& rng) {
    GruCell g = zeros(in, hidden);
    g.Wz = glorot<Scalar>(rng, in, hidden);
    g.Wr = glorot<Scalar>(rng, in, hidden);
    g.Wh = glorot<Scalar>(rng, in, hidden);
    g.Uz = glorot<Scalar>(rng, hidden, hidden);
    g.Ur = glorot<Scalar>(rng, hidden, hidden);
    g.Uh = glorot<Scalar>(rng, hidden, hidden);
    return g;
  }

  Index input_size() const { return Wz.rows(); }
  Index hidden_size() const { return Wz.cols(); }

  /// Returns all hidden states (T x hidden).
  Mat forward(const Mat& x, Cache* cache) const {
    if (x.cols() != input_size()) {
      throw DimensionError("gru: input has " + std::to_string(x.cols()) + " columns, layer expects " +
                           std::to_string(input_size()));
    }
    const Index T = x.rows();
    const Index H = hidden_size();
    Mat xz = x * Wz;
    Mat xr = x * Wr;
    Mat xh = x * Wh;
    xz.rowwise() += bz.row(0);
    xr.rowwise() += br.row(0);
    xh.rowwise() += bh.row(0);

    Mat h = Mat::Zero(T + 1, H);
    Mat z(T, H), r(T, H), c(T, H);
    MatrixT<Scalar> hp(1, H), rh(1, H);
    for (Index t = 0; t < T; ++t) {
      hp = h.row(t);
      z.row(t) = sigmoid<Scalar>(xz.row(t) + hp * Uz);
      r.row(t) = sigmoid<Scalar>(xr.row(t) + hp * Ur);
      rh = r.row(t).cwiseProduct(hp);
      c.row(t) = (xh.row(t) + rh * Uh).array().tanh().matrix();
      h.row(t + 1) = (hp.array() * (Scalar(1) - z.row(t).array()) + z.row(t).array() * c.row(t).array()).matrix();
    }
    Mat out = h.bottomRows(T);
    if (cache) {
      cache->x = x;
      cache->h = std::move(h);
      cache->z = std::move(z);
      cache->r = std::move(r);
      cache->c = std::move(c);
      cache->filled = true;
    }
    return out;
  }

  /// Backpropagation through time. `dh_out` is dL/dh_t for t = 1..T (T x hidden).
  Mat backward(const Cache& cache, const Mat& dh_out, GruCell& grads) const {
    if (!cache.filled) throw StateError("gru: backward called without a cached forward pass");
    const Index T = cache.x.rows();
    const Index H = hidden_size();
    if (dh_out.rows() != T || dh_out.cols() != H) throw DimensionError("gru: upstream gradient shape mismatch");

    Mat daz(T, H), dar(T, H), dac(T, H), rh_all(T, H);
    MatrixT<Scalar> carry = MatrixT<Scalar>::Zero(1, H);
    MatrixT<Scalar> dh(1, H), dprev(1, H), drh(1, H);
    for (Index t = T - 1; t >= 0; --t) {
      const auto hp = cache.h.row(t);
      const auto z = cache.z.row(t).array();
      const auto r = cache.r.row(t).array();
      const auto c = cache.c.row(t).array();
      dh = dh_out.row(t) + carry;

      const Eigen::Array<Scalar, 1, Eigen::Dynamic> dz = dh.array() * (c - hp.array());
      const Eigen::Array<Scalar, 1, Eigen::Dynamic> dc = dh.array() * z;
      dprev = (dh.array() * (Scalar(1) - z)).matrix();

      dac.row(t) = (dc * (Scalar(1) - c * c)).matrix();
      drh = dac.row(t) * Uh.transpose();
      rh_all.row(t) = (r * hp.array()).matrix();
      dprev.array() += drh.array() * r;
      dar.row(t) = (drh.array() * hp.array() * r * (Scalar(1) - r)).matrix();
      daz.row(t) = (dz * z * (Scalar(1) - z)).matrix();

      dprev.noalias() += daz.row(t) * Uz.transpose();
      dprev.noalias() += dar.row(t) * Ur.transpose();
      carry = dprev;
    }

    const Mat hprev = cache.h.topRows(T);
    grads.Wz.noalias() += cache.x.transpose() * daz;
    grads.Wr.noalias() += cache.x.transpose() * dar;
    grads.Wh.noalias() += cache.x.transpose() * dac;
    grads.Uz.noalias() += hprev.transpose() * daz;
    grads.Ur.noalias() += hprev.transpose() * dar;
    grads.Uh.noalias() += rh_all.transpose() * dac;
    grads.bz += daz.colwise().sum();
    grads.br += dar.colwise().sum();
    grads.bh += dac.colwise().sum();

    Mat dx = daz * Wz.transpose();
    dx.noalias() += dar * Wr.transpose();
    dx.noalias() += dac * Wh.transpose();
    return dx;
  }

  std::vector<Mat*> params() { return {&Wz, &Wr, &Wh, &Uz, &Ur, &Uh, &bz, &br, &bh}; }
  std::vector<const Mat*> params() const { return {&Wz, &Wr, &Wh, &Uz, &Ur, &Uh, &bz, &br, &bh}; }
  static std::vector<std::string> param_names() { return {"Wz", "Wr", "Wh", "Uz", "Ur", "Uh", "bz", "br", "bh"}; }
};

/// GRU layer, optionally bidirectional. Bidirectional output concatenates
/// [forward | backward] per timestep; in `last` mode it is the forward state
/// after the final step next to the backward state after its final step
/// (which sits at t = 0), width 2*hidden.
template <typename Scalar = double>
struct GruLayer {
  using Mat = MatrixT<Scalar>;
  using Cell = GruCell<Scalar>;

  Direction direction = Direction::forward;
  ReturnMode return_mode = ReturnMode::sequence;
  Cell fwd;
  Cell bwd;  // empty unless bidirectional

  struct Cache {
    typename Cell::Cache fwd;
    typename Cell::Cache bwd;
    Index timesteps = 0;
    bool filled = false;
  };

  static GruLayer zeros(Index in, Index hidden, Direction dir, ReturnMode mode) {
    GruLayer l;
    l.direction = dir;
    l.return_mode = mode;
    l.fwd = Cell::zeros(in, hidden);
    if (dir == Direction::bidirectional) l.bwd = Cell::zeros(in, hidden);
    return l;
  }

  static GruLayer init(Index in, Index hidden, Direction dir, ReturnMode mode, Rng& rng) {
    GruLayer l;
    l.direction = dir;
    l.return_mode = mode;
    l.fwd = Cell::init(in, hidden, rng);
    if (dir == Direction::bidirectional) l.bwd = Cell::init(in, hidden, rng);
    return l;
  }

  bool bidirectional() const { return direction == Direction::bidirectional; }
  Index input_size() const { return fwd.input_size(); }
  Index hidden_size() const { return fwd.hidden_size(); }
  Index output_width() const { return bidirectional() ? 2 * hidden_size() : hidden_size(); }
  Index output_rows(Index timesteps) const { return return_mode == ReturnMode::sequence ? timesteps : 1; }

  Mat forward(const Mat& x) const { return run(x, nullptr); }
  Mat forward(const Mat& x, Cache& cache) const { return run(x, &cache); }

  Mat backward(const Cache& cache, const Mat& dy, GruLayer& grads) const {
    if (!cache.filled) throw StateError("gru: backward called without a cached forward pass");
    const Index T = cache.timesteps;
    const Index H = hidden_size();
    if (dy.rows() != output_rows(T) || dy.cols() != output_width()) {
      throw DimensionError("gru: upstream gradient shape mismatch");
    }
    Mat dfwd = Mat::Zero(T, H);
    Mat dbwd;  // in reversed time
    if (bidirectional()) dbwd = Mat::Zero(T, H);
    if (return_mode == ReturnMode::sequence) {
      dfwd = dy.leftCols(H);
      if (bidirectional()) dbwd = dy.rightCols(H).colwise().reverse();
    } else {
      dfwd.row(T - 1) = dy.leftCols(H);
      if (bidirectional()) dbwd.row(T - 1) = dy.rightCols(H);
    }
    Mat dx = fwd.backward(cache.fwd, dfwd, grads.fwd);
    if (bidirectional()) dx += bwd.backward(cache.bwd, dbwd, grads.bwd).colwise().reverse();
    return dx;
  }

  GruLayer zeros_like() const { return zeros(input_size(), hidden_size(), direction, return_mode); }

  std::vector<Mat*> params() {
    auto p = fwd.params();
    if (bidirectional()) {
      auto b = bwd.params();
      p.insert(p.end(), b.begin(), b.end());
    }
    return p;
  }
  std::vector<const Mat*> params() const {
    auto p = fwd.params();
    if (bidirectional()) {
      auto b = bwd.params();
      p.insert(p.end(), b.begin(), b.end());
    }
    return p;
  }
  std::vector<std::string> param_names() const {
    std::vector<std::string> names;
    for (const auto& n : Cell::param_names()) names.push_back("fwd." + n);
    if (bidirectional()) {
      for (const auto& n : Cell::param_names()) names.push_back("bwd." + n);
    }
    return names;
  }

 private:
  Mat run(const Mat& x, Cache* cache) const {
    if (x.rows() < 1) throw DimensionError("gru: empty input sequence");
    const Index T = x.rows();
    const Index H = hidden_size();
    Mat hf = fwd.forward(x, cache ? &cache->fwd : nullptr);
    Mat hb;
    if (bidirectional()) {
      if (bwd.input_size() != fwd.input_size()) throw DimensionError("gru: direction input sizes differ");
      Mat xr = x.colwise().reverse();
      hb = bwd.forward(xr, cache ? &cache->bwd : nullptr);  // reversed time
    }
    if (cache) {
      cache->timesteps = T;
      cache->filled = true;
    }
    if (return_mode == ReturnMode::sequence) {
      if (!bidirectional()) return hf;
      Mat out(T, 2 * H);
      out.leftCols(H) = hf;
      out.rightCols(H) = hb.colwise().reverse();
      return out;
    }
    Mat out(1, output_width());
    out.leftCols(H) = hf.row(T - 1);
    if (bidirectional()) out.rightCols(H) = hb.row(T - 1);
    return out;
  }
};

}  // namespace surge::nn
