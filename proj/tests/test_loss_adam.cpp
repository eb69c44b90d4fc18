#include "helpers.hpp"
#include "surge/nn/adam.hpp"
#include "surge/nn/gradcheck.hpp"
#include "surge/nn/loss.hpp"

#include <gtest/gtest.h>

using namespace surge;
using testutil::Gen;

TEST(Metrics, MatchLoopOracleOn1000Cases) {
  Gen g(20);
  for (int k = 0; k < 1000; ++k) {
    const auto n = g.size(1, 64);
    const auto y = g.vec(n, -3, 3), p = g.vec(n, -3, 3);
    ASSERT_NEAR(nn::mse(y, p), oracle::mse(y, p), 1e-12);
    ASSERT_NEAR(nn::rmse(y, p), oracle::rmse(y, p), 1e-12);
    ASSERT_NEAR(nn::mae(y, p), oracle::mae(y, p), 1e-12);
    std::vector<double> lab(n), prob = g.vec(n, 0.0, 1.0);
    for (auto& l : lab) l = g.rng.below(2) ? 1.0 : 0.0;
    ASSERT_NEAR(nn::bce(lab, prob), oracle::bce(lab, prob), 1e-12);
  }
}

TEST(Metrics, ErrorsOnMismatchAndEmpty) {
  EXPECT_THROW(nn::mse({1.0, 2.0}, {1.0}), DimensionError);
  EXPECT_THROW(nn::rmse({}, {}), DataError);
  EXPECT_THROW(nn::mae({1.0}, {}), DimensionError);
}

TEST(Metrics, KnownValues) {
  EXPECT_DOUBLE_EQ(nn::mse({0.0, 0.0}, {1.0, 3.0}), 5.0);
  EXPECT_DOUBLE_EQ(nn::mae({0.0, 0.0}, {1.0, -3.0}), 2.0);
  EXPECT_NEAR(nn::bce({1.0}, {0.5}), std::log(2.0), 1e-15);
  // clamp keeps a confident wrong answer finite
  EXPECT_NEAR(nn::bce({1.0}, {0.0}), -std::log(1e-7), 1e-9);
}

TEST(Metrics, FloatInstantiation) {
  const std::vector<float> y{1.f, 2.f}, p{1.5f, 2.5f};
  EXPECT_FLOAT_EQ(nn::mse(std::span<const float>(y), std::span<const float>(p)), 0.25f);
}

TEST(LossGrad, MseAndBceGradientsMatchFiniteDifferences) {
  Gen g(21);
  for (int k = 0; k < 20; ++k) {
    const auto r = static_cast<Index>(g.size(1, 5)), c = static_cast<Index>(g.size(1, 5));
    Matrix p = g.matrix(r, c, 0.05, 0.95);
    const Matrix t = g.matrix(r, c, 0.0, 1.0);
    const auto m = nn::mse_grad(p, t);
    EXPECT_TRUE(nn::check_gradients({&p}, {m.grad}, [&] { return nn::mse_grad(p, t).value; }).ok());
    const double label = k % 2 ? 1.0 : 0.0;
    const auto b = nn::bce_grad(p, label);
    EXPECT_TRUE(nn::check_gradients({&p}, {b.grad}, [&] { return nn::bce_grad(p, label).value; }).ok());
  }
}

TEST(LossGrad, BceGradientIsZeroWhereClamped) {
  Matrix p(1, 2);
  p << 0.0, 1.0;
  const auto b = nn::bce_grad(p, 1.0);
  EXPECT_EQ(b.grad(0, 0), 0.0);
  EXPECT_EQ(b.grad(0, 1), 0.0);
}

TEST(MomentLoss, IdenticalBatchesGiveZero) {
  Gen g(22);
  std::vector<Matrix> a;
  for (int i = 0; i < 6; ++i) a.push_back(g.matrix(3, 4));
  EXPECT_EQ(nn::moment_loss(a, a), 0.0);
}

TEST(MomentLoss, ConstantShiftGivesShift) {
  Gen g(23);
  for (double c : {0.3, -1.25, 2.0}) {
    std::vector<Matrix> a, b;
    for (int i = 0; i < 5; ++i) {
      a.push_back(g.matrix(2, 3));
      b.push_back((a.back().array() + c).matrix());
    }
    EXPECT_NEAR(nn::moment_loss(a, b), std::abs(c), 1e-12);
  }
}

TEST(MomentLoss, MatchesScalarOracle) {
  Gen g(24);
  for (int k = 0; k < 200; ++k) {
    const auto r = static_cast<Index>(g.size(1, 4)), c = static_cast<Index>(g.size(1, 4));
    const auto n = g.size(1, 8);
    std::vector<Matrix> a, b;
    std::vector<oracle::Vec> av, bv;
    for (std::size_t i = 0; i < n; ++i) {
      a.push_back(g.matrix(r, c));
      b.push_back(g.matrix(r, c));
      av.push_back(testutil::to_vec(a.back()));
      bv.push_back(testutil::to_vec(b.back()));
    }
    ASSERT_NEAR(nn::moment_loss(a, b), oracle::moment(av, bv), 1e-12);
  }
}

TEST(MomentLoss, GradientMatchesFiniteDifferences) {
  Gen g(25);
  for (int k = 0; k < 10; ++k) {
    std::vector<Matrix> real, gen;
    for (int i = 0; i < 4; ++i) {
      real.push_back(g.matrix(2, 3));
      gen.push_back(g.matrix(2, 3));
    }
    const auto mg = nn::moment_loss_grad(real, gen);
    std::vector<Matrix*> params;
    for (auto& m : gen) params.push_back(&m);
    const auto res = nn::check_gradients(params, mg.grad, [&] { return nn::moment_loss(real, gen); });
    EXPECT_TRUE(res.ok()) << res.worst << " " << res.max_rel_error;
  }
}

TEST(MomentLoss, ShapeMismatchRejected) {
  EXPECT_THROW(nn::moment_loss({Matrix::Zero(2, 2)}, {Matrix::Zero(2, 3)}), DimensionError);
  EXPECT_THROW(nn::moment_loss({}, {Matrix::Zero(2, 3)}), DataError);
}

TEST(Adam, MatchesScalarTrace) {
  Gen g(26);
  const std::size_t n = 7;
  Matrix p = g.matrix(1, static_cast<Index>(n));
  std::vector<oracle::Vec> grads;
  for (int t = 0; t < 25; ++t) grads.push_back(g.vec(n, -2, 2));
  const auto ref = oracle::adam_trace(testutil::to_vec(p), grads, 1e-3, 0.9, 0.999, 1e-8);
  nn::Adam<double> opt;
  for (std::size_t t = 0; t < grads.size(); ++t) {
    Matrix gm(1, static_cast<Index>(n));
    for (std::size_t i = 0; i < n; ++i) gm(0, static_cast<Index>(i)) = grads[t][i];
    opt.step({&p}, {&gm});
    for (std::size_t i = 0; i < n; ++i) ASSERT_NEAR(p(0, static_cast<Index>(i)), ref[t][i], 1e-15);
  }
  EXPECT_EQ(opt.step_count(), 25u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // With bias correction the first step is lr * sign(g) for |g| >> eps.
  Matrix p = Matrix::Zero(1, 3);
  Matrix g(1, 3);
  g << 5.0, -0.2, 1e3;
  nn::Adam<double> opt;
  opt.step({&p}, {&g});
  EXPECT_NEAR(p(0, 0), -1e-3, 1e-9);
  EXPECT_NEAR(p(0, 1), 1e-3, 1e-9);
  EXPECT_NEAR(p(0, 2), -1e-3, 1e-9);
}

TEST(Adam, RejectsShapeChangesAndBadConfig) {
  Matrix p = Matrix::Zero(2, 2), g = Matrix::Zero(2, 2), g2 = Matrix::Zero(3, 2);
  nn::Adam<double> opt;
  opt.step({&p}, {&g});
  EXPECT_THROW(opt.step({&p}, {&g2}), DimensionError);
  EXPECT_THROW(nn::Adam<double>(nn::AdamConfig{1e-3, 1.0, 0.999, 1e-8}), DataError);
}
