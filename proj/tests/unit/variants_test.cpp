#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "scada/error.hpp"
#include "scada/sfda.hpp"
#include "scada/variants.hpp"
#include "toy_world.hpp"

using namespace scada;
using scada::testing::make_toy_world;

namespace {

UnlearnConfig quick_config() {
  UnlearnConfig c;
  c.epochs = 2;
  c.steps_per_epoch = 16;
  c.init_steps = 150;
  c.batch_size = 32;
  c.seed = 11;
  return c;
}

const scada::testing::ToyWorld& world() {
  static const auto w = make_toy_world(6, {1});
  return w;
}

GammaVector gamma_of(std::initializer_list<double> values) {
  GammaVector g;
  g.accumulation = Vector(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) g.accumulation[i++] = v;
  g.num_samples = 1;
  return g;
}

}  // namespace

TEST(Gamma, SumsToSampleCount) {
  const GammaVector g = estimate_gamma(world().source, world().target_retain);
  EXPECT_EQ(g.num_samples, world().target_retain.size());
  EXPECT_NEAR(g.accumulation.sum(), static_cast<double>(g.num_samples), 1e-9);
  EXPECT_TRUE((g.accumulation.array() >= 0.0).all());
}

TEST(Gamma, InvariantUnderSamplePermutation) {
  const UnlabeledDataset& t = world().target_retain;
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(t.size()));
  std::iota(rows.begin(), rows.end(), 0);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(rows.begin(), rows.end(), rng);
    const GammaVector a = estimate_gamma(world().source, t);
    const GammaVector b = estimate_gamma(world().source, t.subset(rows));
    for (Eigen::Index c = 0; c < a.accumulation.size(); ++c) EXPECT_EQ(a.accumulation[c], b.accumulation[c]);
  }
}

TEST(Gamma, AbsentClassHasTheSmallestMass) {
  const GammaVector g = estimate_gamma(world().source, world().target_retain);
  Eigen::Index arg = 0;
  g.accumulation.minCoeff(&arg);
  EXPECT_EQ(arg, 1);
  EXPECT_THROW(estimate_gamma(world().source, UnlabeledDataset{Matrix(0, 2)}), InvalidArgument);
}

TEST(PredictForget, BottomClassesInAscendingOrder) {
  const GammaVector g = gamma_of({5.0, 0.5, 3.0, 0.1, 9.0, 2.0});
  EXPECT_EQ(predict_forget_classes(g, 1, 1), (std::vector<int>{3}));
  EXPECT_EQ(predict_forget_classes(g, 1, 3), (std::vector<int>{3, 1, 5}));
  EXPECT_EQ(predict_forget_classes(g, 2, 2), (std::vector<int>{3, 1, 5, 2}));
}

TEST(PredictForget, TiesBreakByClassIndex) {
  const GammaVector g = gamma_of({1.0, 1.0, 0.0, 1.0});
  EXPECT_EQ(predict_forget_classes(g, 1, 3), (std::vector<int>{2, 0, 1}));
}

TEST(PredictForget, RejectsOutOfRangeCounts) {
  const GammaVector g = gamma_of({1.0, 2.0, 3.0, 4.0});
  EXPECT_THROW(predict_forget_classes(g, 0, 3), InvalidArgument);
  EXPECT_THROW(predict_forget_classes(g, 1, 4), InvalidArgument);
  EXPECT_THROW(predict_forget_classes(g, 2, 2), InvalidArgument);
  EXPECT_NO_THROW(predict_forget_classes(g, 1, 3));
}

TEST(UcScada, UnlearnsThePredictedClasses) {
  auto sfda = make_sfda_loss("shot_like");
  const UnknownClassResult r = run_uc_scada(world().source, world().target_retain, 1, *sfda, quick_config(), 2);
  ASSERT_EQ(r.predicted.size(), 2u);
  EXPECT_EQ(r.predicted.front(), 1);
  std::vector<int> sorted = r.predicted;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(r.run.bank.classes(), sorted);
  EXPECT_EQ(r.run.history.size(), 32u);
}

TEST(CScada, SingleRequestMatchesOneRun) {
  const UnlearnConfig cfg = quick_config();
  ForgetRequestSequence seq;
  seq.requests = {{1}};
  auto a = make_sfda_loss("shot_like");
  auto b = make_sfda_loss("shot_like");
  const ContinualResult c = run_c_scada(world().source, world().target_retain, seq, *a, cfg);
  UnlearnConfig stage0 = cfg;
  stage0.seed = derive_seed(cfg.seed, 0xC0);
  const ScadaResult s = run_scada_ul(world().source, world().target_retain, {1}, *b, stage0);
  ASSERT_EQ(c.stages.size(), 1u);
  EXPECT_EQ(c.final_model().parameters(), s.model.parameters());
}

TEST(CScada, LaterRequestsUseReducedBudget) {
  ForgetRequestSequence seq;
  seq.requests = {{1}, {3}};
  seq.subset_fraction = 0.5;
  auto sfda = make_sfda_loss("shot_like");
  const UnlearnConfig cfg = quick_config();
  const ContinualResult c = run_c_scada(world().source, world().target_retain, seq, *sfda, cfg);
  ASSERT_EQ(c.stages.size(), 2u);
  EXPECT_EQ(c.stages[0].history.size(), 32u);
  EXPECT_EQ(c.stages[1].history.size(), 16u);  // epochs / 2
}

TEST(CScada, ValidatesRequests) {
  ForgetRequestSequence s;
  EXPECT_THROW(s.validate(5), InvalidArgument);
  s.requests = {{1}, {}};
  EXPECT_THROW(s.validate(5), InvalidArgument);
  s.requests = {{1}, {1, 2}};
  EXPECT_THROW(s.validate(5), InvalidArgument);
  s.requests = {{7}};
  EXPECT_THROW(s.validate(5), InvalidArgument);
  s.requests = {{0, 1}, {2, 3, 4}};
  EXPECT_THROW(s.validate(5), InvalidArgument);
  s.requests = {{0}, {2}};
  s.subset_fraction = 0.0;
  EXPECT_THROW(s.validate(5), InvalidArgument);
  s.subset_fraction = 1.0;
  EXPECT_NO_THROW(s.validate(5));
}
