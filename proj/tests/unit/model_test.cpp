#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "scada/error.hpp"
#include "scada/losses.hpp"
#include "scada/model.hpp"

using namespace scada;
using scada::testing::fd_gradient;
using scada::testing::relative_error;

namespace {

Matrix random_inputs(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Matrix x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n01(rng);
  return x;
}

}  // namespace

TEST(Model, ParameterCountMatchesLayout) {
  const Classifier m({{3, 5, 4}, Activation::Tanh}, 6, 1);
  EXPECT_EQ(m.num_parameters(), 3 * 5 + 5 + 5 * 4 + 4 + 4 * 6 + 6);
  EXPECT_EQ(m.head_offset(), 3 * 5 + 5 + 5 * 4 + 4);
  EXPECT_EQ(m.feature_dim(), 4);
}

TEST(Model, ForwardShapesAndSoftmaxRows) {
  const Classifier m({{2, 8}, Activation::Relu}, 3, 2);
  const ForwardPass p = m.forward(random_inputs(10, 2, 3));
  EXPECT_EQ(p.logits.rows(), 10);
  EXPECT_EQ(p.logits.cols(), 3);
  EXPECT_EQ(p.features().cols(), 8);
  for (Eigen::Index i = 0; i < p.probs.rows(); ++i) EXPECT_NEAR(p.probs.row(i).sum(), 1.0, 1e-12);
}

TEST(Model, SameSeedSameParameters) {
  const Architecture a{{2, 8, 8}, Activation::Tanh};
  EXPECT_EQ(Classifier(a, 4, 9).parameters(), Classifier(a, 4, 9).parameters());
  EXPECT_NE(Classifier(a, 4, 9).parameters(), Classifier(a, 4, 10).parameters());
}

TEST(Model, HeadViewsReadTheTail) {
  const Classifier m({{2, 3}, Activation::Tanh}, 4, 5);
  const Vector& p = m.parameters();
  EXPECT_EQ(m.head_weights().rows(), 4);
  EXPECT_EQ(m.head_weights().cols(), 3);
  EXPECT_EQ(m.head_weights()(0, 0), p[m.head_offset()]);
  EXPECT_EQ(m.head_bias()[3], p[p.size() - 1]);
}

TEST(Model, SoftmaxIsStableForHugeLogits) {
  Matrix logits(1, 3);
  logits << 1000.0, 999.0, -1000.0;
  const Matrix p = softmax(logits);
  EXPECT_TRUE(p.allFinite());
  EXPECT_NEAR(p(0, 0), 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
  EXPECT_NEAR(log_softmax(logits)(0, 2), -2000.0 - std::log1p(std::exp(-1.0)), 1e-9);
}

TEST(Model, RejectsBadArguments) {
  EXPECT_THROW(Classifier({{2, 4}, Activation::Tanh}, 1, 0), InvalidArgument);
  EXPECT_THROW(Classifier({{}, Activation::Tanh}, 3, 0), InvalidArgument);
  EXPECT_THROW(Classifier({{2, 0}, Activation::Tanh}, 3, 0), InvalidArgument);
  EXPECT_THROW(Classifier({{2, 4}, Activation::Tanh}, 3, Vector::Zero(5)), InvalidArgument);
  const Classifier m({{2, 4}, Activation::Tanh}, 3, 0);
  EXPECT_THROW(m.forward(Matrix::Zero(2, 3)), InvalidArgument);
  EXPECT_THROW(activation_from_string("sigmoid"), InvalidArgument);
}

class BackwardFd : public ::testing::TestWithParam<Activation> {};

TEST_P(BackwardFd, ParameterAndInputGradients) {
  const Architecture arch{{3, 7, 5}, GetParam()};
  const Classifier m(arch, 4, 21);
  const Matrix x = random_inputs(6, 3, 22);
  const Matrix w = random_inputs(6, 4, 23);  // loss = sum(w .* logits) + CE
  const std::vector<int> labels{0, 1, 2, 3, 0, 1};
  auto value = [&](const Classifier& c, const Matrix& in) {
    const Matrix logits = c.forward(in).logits;
    return (w.array() * logits.array()).sum() + cross_entropy(logits, labels).value;
  };
  const ForwardPass pass = m.forward(x);
  LogitLoss ce = cross_entropy(pass.logits, labels);
  const Gradients g = m.backward(pass, w + ce.dlogits);

  const Vector gp_fd = fd_gradient([&](const Vector& p) { return value(Classifier(arch, 4, p), x); }, m.parameters());
  EXPECT_LT(relative_error(g.params, gp_fd), 1e-6);

  const Vector gx_fd = fd_gradient(
      [&](const Vector& v) { return value(m, Eigen::Map<const Matrix>(v.data(), x.rows(), x.cols())); },
      Eigen::Map<const Vector>(x.data(), x.size()));
  EXPECT_LT(relative_error(Eigen::Map<const Vector>(g.inputs.data(), g.inputs.size()), gx_fd), 1e-6);
}

INSTANTIATE_TEST_SUITE_P(Activations, BackwardFd, ::testing::Values(Activation::Tanh, Activation::Relu));
