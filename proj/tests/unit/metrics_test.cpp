#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "scada/error.hpp"
#include "scada/metrics.hpp"
#include "toy_world.hpp"

using namespace scada;

TEST(UnlearnScore, TableValues) {
  EXPECT_NEAR(unlearn_score(75.1, 0.0), 0.751, 1e-12);
  EXPECT_NEAR(unlearn_score(75.8, 58.1), 0.479, 5e-4);
  EXPECT_NEAR(std::round(unlearn_score(75.8, 58.1) * 100) / 100, 0.48, 1e-12);
  EXPECT_EQ(unlearn_score(0.0, 42.0), 0.0);
}

TEST(UnlearnScore, ClosedFormEverywhere) {
  for (double r = 0; r <= 100; r += 12.5)
    for (double f = 0; f <= 100; f += 12.5) EXPECT_NEAR(unlearn_score(r, f), r / (100.0 + f), 1e-9);
}

TEST(Accuracy, FromProbabilities) {
  Matrix p(4, 2);
  p << 0.9, 0.1, 0.2, 0.8, 0.6, 0.4, 0.3, 0.7;
  const std::vector<int> y{0, 1, 1, 1};
  EXPECT_DOUBLE_EQ(accuracy_from_probs(p, y), 75.0);
  EXPECT_THROW(accuracy_from_probs(Matrix(0, 2), std::vector<int>{}), InvalidArgument);
}

TEST(Mia, SeparableEntropiesGiveAPerfectAttack) {
  Vector member = Vector::LinSpaced(40, 0.01, 0.2);
  Vector nonmember = Vector::LinSpaced(40, 1.0, 1.5);
  Vector forget_like_ood = Vector::Constant(10, 1.2);
  Vector forget_like_member = Vector::Constant(10, 0.05);
  const MiaResult a = mia_from_entropies(member, nonmember, forget_like_ood, 1);
  EXPECT_FALSE(a.degenerate);
  EXPECT_DOUBLE_EQ(a.attack_accuracy, 100.0);
  EXPECT_DOUBLE_EQ(a.percent, 0.0);
  EXPECT_DOUBLE_EQ(mia_from_entropies(member, nonmember, forget_like_member, 1).percent, 100.0);
}

TEST(Mia, IdenticalEntropiesFallBackToMajority) {
  const MiaResult r = mia_from_entropies(Vector::Constant(30, 0.4), Vector::Constant(10, 0.4),
                                         Vector::Constant(5, 0.4), 0);
  EXPECT_TRUE(r.degenerate);
  EXPECT_DOUBLE_EQ(r.percent, 100.0);  // members are the majority
  const MiaResult s = mia_from_entropies(Vector::Constant(4, 0.4), Vector::Constant(10, 0.4),
                                         Vector::Constant(5, 0.4), 0);
  EXPECT_DOUBLE_EQ(s.percent, 0.0);
}

TEST(Mia, RejectsEmptyGroups) {
  EXPECT_THROW(mia_from_entropies(Vector(0), Vector::Ones(2), Vector::Ones(2), 0), InvalidArgument);
}

TEST(Mia, DeterministicUnderSeed) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.5, 0.3);
  Vector a(50), b(50), f(20);
  for (auto* v : {&a, &b, &f})
    for (Eigen::Index i = 0; i < v->size(); ++i) (*v)[i] = std::abs(n(rng));
  b.array() += 0.3;
  const MiaResult x = mia_from_entropies(a, b, f, 4);
  const MiaResult y = mia_from_entropies(a, b, f, 4);
  EXPECT_EQ(x.percent, y.percent);
  EXPECT_EQ(x.attack_accuracy, y.attack_accuracy);
}

TEST(RateCurves, Boundaries) {
  const Vector forget{{0.3, 0.6, 0.9}};
  const Vector retain{{0.5, 0.95}};
  const std::vector<double> k{0.0, 1.0 + 1e-9};
  const RateCurves c = fnr_fpr_from_confidence(forget, retain, k);
  EXPECT_DOUBLE_EQ(c.fnr[0], 1.0);
  EXPECT_DOUBLE_EQ(c.fpr[0], 0.0);
  EXPECT_DOUBLE_EQ(c.fnr[1], 0.0);
  EXPECT_DOUBLE_EQ(c.fpr[1], 1.0);
  EXPECT_THROW(fnr_fpr_from_confidence(forget, retain, std::vector<double>{}), InvalidArgument);
}

TEST(RateCurves, MonotoneOnAnyGrid) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u;
  for (int trial = 0; trial < 50; ++trial) {
    Vector f(30), r(40);
    for (auto* v : {&f, &r})
      for (Eigen::Index i = 0; i < v->size(); ++i) (*v)[i] = u(rng);
    std::vector<double> k(25);
    for (double& t : k) t = u(rng);
    std::sort(k.begin(), k.end());
    const RateCurves c = fnr_fpr_from_confidence(f, r, k);
    for (std::size_t i = 1; i < k.size(); ++i) {
      EXPECT_LE(c.fnr[i], c.fnr[i - 1]);
      EXPECT_GE(c.fpr[i], c.fpr[i - 1]);
    }
  }
}

TEST(UniformThresholds, CoverTheUnitInterval) {
  const auto k = uniform_thresholds(5);
  EXPECT_EQ(k, (std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}));
  EXPECT_THROW(uniform_thresholds(1), InvalidArgument);
}

TEST(Ece, CalibratedPredictorIsZero) {
  // Confidence 0.75 everywhere, three out of four correct.
  const Vector conf = Vector::Constant(8, 0.75);
  const std::vector<bool> ok{true, true, true, false, true, true, true, false};
  EXPECT_NEAR(ece_from_predictions(conf, ok, 10), 0.0, 1e-15);
}

TEST(Ece, ConfidentAndWrongIsOne) {
  EXPECT_DOUBLE_EQ(ece_from_predictions(Vector::Ones(5), std::vector<bool>(5, false), 15), 1.0);
}

TEST(Ece, HandComputedTwoBins) {
  // Bin (0,0.5]: conf {0.3, 0.5}, acc 1/2 -> |0.5 - 0.4| * 2/4.
  // Bin (0.5,1]: conf {0.8, 1.0}, acc 1   -> |1 - 0.9| * 2/4.
  const Vector conf{{0.3, 0.5, 0.8, 1.0}};
  const std::vector<bool> ok{true, false, true, true};
  EXPECT_NEAR(ece_from_predictions(conf, ok, 2), 0.1, 1e-12);
  EXPECT_THROW(ece_from_predictions(conf, ok, 0), InvalidArgument);
  EXPECT_THROW(ece_from_predictions(Vector(0), {}, 3), InvalidArgument);
}

TEST(Cosine, IdenticalAndOppositeVectors) {
  Matrix a(2, 3);
  a << 1, 2, 3, 1, 2, 3;
  EXPECT_NEAR(mean_pairwise_cosine(a, a), 1.0, 1e-12);
  EXPECT_NEAR(mean_pairwise_cosine(a, -a), -1.0, 1e-12);
  Matrix b(1, 3);
  b << 0, 0, 1;
  Matrix c(2, 3);
  c << 1, 0, 0, 0, 0, 1;
  EXPECT_NEAR(mean_pairwise_cosine(b, c), 0.5, 1e-12);
  EXPECT_TRUE(std::isnan(mean_pairwise_cosine(Matrix(0, 3), c)));
}

TEST(Evaluate, PureAndSerializable) {
  const auto w = scada::testing::make_toy_world(5, {1});
  EvalSets sets{w.domains.target.filter({0, 2, 3, 4}), w.domains.target.filter({1}), {}};
  OodSpec o;
  o.num_classes = 2;
  o.cluster_std = 0.1;
  o.center_spread = 1.0;
  o.reference_centers = w.domains.source_centers;
  sets.ood = sample_ood_classes(o, 1);
  const MetricsReport a = evaluate(w.source, sets);
  const MetricsReport b = evaluate(w.source, sets);
  EXPECT_EQ(a.retain_acc, b.retain_acc);
  EXPECT_EQ(a.mia_pct, b.mia_pct);
  EXPECT_EQ(a.ece_forget, b.ece_forget);
  EXPECT_NEAR(a.unlearn_score, unlearn_score(a.retain_acc, a.forget_acc), 1e-12);
  EXPECT_EQ(a.curves.thresholds.size(), 101u);

  MetricsReport named = a;
  named.method = "original";
  named.seed = 7;
  const MetricsReport back = metrics_from_json(to_json(named));
  EXPECT_EQ(back.method, "original");
  EXPECT_EQ(back.seed, 7u);
  EXPECT_EQ(back.retain_acc, a.retain_acc);
  EXPECT_EQ(back.curves.fnr, a.curves.fnr);
  EXPECT_EQ(back.ece_retain, a.ece_retain);
}

TEST(CosineReport, SplitsByDomainAndMembership) {
  const auto w = scada::testing::make_toy_world(5, {1});
  const Matrix adv = w.domains.source.filter({1}).inputs.topRows(3);
  const CosineReport r =
      adversarial_cosine_report(w.source, adv, w.domains.source, w.domains.target, std::set<int>{1});
  // Adversarial rows drawn from the forget class itself look like that class.
  EXPECT_GT(r.source_forget, r.source_retain);
  EXPECT_GT(r.target_forget, r.target_retain);
}
