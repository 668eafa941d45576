#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "scada/error.hpp"
#include "scada/sfda.hpp"

using namespace scada;
using scada::testing::fd_gradient;
using scada::testing::relative_error;

namespace {

const Architecture kArch{{2, 8, 6}, Activation::Tanh};

UnlabeledDataset random_target(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  UnlabeledDataset t;
  t.inputs.resize(n, 2);
  for (Eigen::Index i = 0; i < t.inputs.size(); ++i) t.inputs.data()[i] = n01(rng);
  return t;
}

TargetBatch whole(const UnlabeledDataset& t) {
  TargetBatch b{t.inputs, {}};
  for (Eigen::Index i = 0; i < t.size(); ++i) b.indices.push_back(i);
  return b;
}

}  // namespace

TEST(ShotLike, GradientMatchesFiniteDifferencesWithTrainableHead) {
  const Classifier m(kArch, 4, 3);
  const UnlabeledDataset t = random_target(20, 4);
  ShotOptions o;
  o.freeze_head = false;
  ShotLikeLoss loss(o);
  loss.refresh(m, t);
  const TargetBatch b = whole(t);
  const Vector fd = fd_gradient([&](const Vector& p) { return loss.compute(Classifier(kArch, 4, p), b).value; },
                                m.parameters());
  EXPECT_LT(relative_error(loss.compute(m, b).grad, fd), 1e-6);
}

TEST(ShotLike, FrozenHeadZeroesOnlyTheHead) {
  const Classifier m(kArch, 4, 3);
  const UnlabeledDataset t = random_target(20, 4);
  ShotOptions o;
  o.freeze_head = false;
  ShotLikeLoss open(o);
  ShotLikeLoss frozen;  // freeze_head defaults to true
  open.refresh(m, t);
  frozen.refresh(m, t);
  const Vector a = open.compute(m, whole(t)).grad;
  const Vector b = frozen.compute(m, whole(t)).grad;
  const Eigen::Index h = m.head_offset();
  EXPECT_EQ(a.head(h), b.head(h));
  EXPECT_TRUE(b.tail(b.size() - h).isZero(0.0));
  EXPECT_FALSE(a.tail(a.size() - h).isZero(1e-12));
}

TEST(ShotLike, ValueDecomposesIntoTerms) {
  const Classifier m(kArch, 4, 5);
  const UnlabeledDataset t = random_target(16, 6);
  ShotLikeLoss loss({0.7, 0.3, true});
  loss.refresh(m, t);
  const auto terms = loss.terms(m, whole(t));
  EXPECT_NEAR(loss.compute(m, whole(t)).value, terms.entropy - 0.7 * terms.diversity + 0.3 * terms.pseudo_ce, 1e-12);
}

TEST(ShotLike, RefreshIsDeterministicAndCoversTheDataset) {
  const Classifier m(kArch, 4, 7);
  const UnlabeledDataset t = random_target(30, 8);
  ShotLikeLoss a, b;
  a.refresh(m, t);
  b.refresh(m, t);
  EXPECT_EQ(a.pseudo_labels(), b.pseudo_labels());
  EXPECT_EQ(a.pseudo_labels().size(), 30u);
}

TEST(ShotLike, RequiresRefreshAndNonEmptyBatches) {
  const Classifier m(kArch, 4, 7);
  const UnlabeledDataset t = random_target(4, 8);
  ShotLikeLoss loss;
  EXPECT_THROW(loss.compute(m, whole(t)), InvalidArgument);
  loss.refresh(m, t);
  EXPECT_THROW(loss.compute(m, TargetBatch{Matrix(0, 2), {}}), InvalidArgument);
  TargetBatch far = whole(t);
  far.indices[0] = 99;
  EXPECT_THROW(loss.compute(m, far), InvalidArgument);
}

TEST(PseudoLabels, CentroidRoundMovesSamplesToTheNearestCentroid) {
  // Two tight feature clusters; the argmax labels one point of cluster B as A.
  Matrix f(6, 1);
  f << 0.0, 0.1, -0.1, 5.0, 5.1, 4.9;
  Matrix p(6, 2);
  p << 0.9, 0.1, 0.9, 0.1, 0.9, 0.1, 0.1, 0.9, 0.1, 0.9, 0.6, 0.4;
  EXPECT_EQ(refine_pseudo_labels(f, p), (std::vector<int>{0, 0, 0, 1, 1, 1}));
  EXPECT_THROW(refine_pseudo_labels(f, p.topRows(3)), InvalidArgument);
}

TEST(EntropyOnly, GradientMatchesFiniteDifferences) {
  const Classifier m(kArch, 3, 9);
  const UnlabeledDataset t = random_target(12, 10);
  const EntropyOnlyLoss loss(1.0, false);
  const TargetBatch b = whole(t);
  const Vector fd = fd_gradient([&](const Vector& p) { return loss.compute(Classifier(kArch, 3, p), b).value; },
                                m.parameters());
  EXPECT_LT(relative_error(loss.compute(m, b).grad, fd), 1e-6);
}

TEST(NullLoss, IsZeroEverywhere) {
  const Classifier m(kArch, 3, 9);
  const ParamLoss l = NullSfdaLoss().compute(m, whole(random_target(3, 1)));
  EXPECT_EQ(l.value, 0.0);
  EXPECT_TRUE(l.grad.isZero(0.0));
  EXPECT_EQ(l.grad.size(), m.num_parameters());
}

TEST(SfdaFactory, KnownAndUnknownNames) {
  EXPECT_EQ(make_sfda_loss("shot_like")->name(), "shot_like");
  EXPECT_EQ(make_sfda_loss("entropy_only")->name(), "entropy_only");
  EXPECT_EQ(make_sfda_loss("none")->name(), "none");
  EXPECT_THROW(make_sfda_loss("tent"), ConfigError);
}
