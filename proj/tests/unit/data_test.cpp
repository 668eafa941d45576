#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

#include "scada/data.hpp"
#include "scada/error.hpp"
#include "scada/model.hpp"
#include "scada/training.hpp"
#include "scada/metrics.hpp"

using namespace scada;

namespace {

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.num_classes = 6;
  s.dim = 2;
  s.samples_per_class = 100;
  s.cluster_std = 0.1;
  s.center_spread = 0.8;
  s.min_center_distance = 8.0;
  return s;
}

std::map<int, int> counts(const DomainDataset& ds) {
  std::map<int, int> m;
  for (int l : ds.labels) ++m[l];
  return m;
}

}  // namespace

TEST(Data, GenerationIsAPureFunction) {
  const SyntheticDomains a = make_synthetic_domains(small_spec(), 3);
  const SyntheticDomains b = make_synthetic_domains(small_spec(), 3);
  EXPECT_EQ(a.source.inputs, b.source.inputs);
  EXPECT_EQ(a.target.inputs, b.target.inputs);
  EXPECT_EQ(a.source.labels, b.source.labels);
  EXPECT_NE(a.source.inputs, make_synthetic_domains(small_spec(), 4).source.inputs);
}

TEST(Data, CentersKeepTheirMinimumDistance) {
  const SyntheticDomains d = make_synthetic_domains(small_spec(), 5);
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j)
      EXPECT_GE((d.source_centers.row(i) - d.source_centers.row(j)).norm(), 0.8 - 1e-12);
  EXPECT_EQ(d.source.domain, Domain::Source);
  EXPECT_EQ(d.target.domain, Domain::Target);
  EXPECT_EQ(d.source.class_set().size(), 6u);
}

TEST(Data, IdentityShiftDrawsTheSameDistribution) {
  SyntheticSpec s = small_spec();
  s.shift = AffineShift::identity(2);
  const SyntheticDomains d = make_synthetic_domains(s, 1);
  EXPECT_TRUE(d.source_centers.isApprox(d.target_centers, 1e-12));
  EXPECT_EQ(d.source.labels, d.target.labels);
  EXPECT_FALSE(d.source.inputs.isApprox(d.target.inputs));  // a fresh draw, not a copy
  for (int c = 0; c < s.num_classes; ++c) {
    const DomainDataset t = d.target.filter({c});
    const double err = (t.inputs.colwise().mean() - d.target_centers.row(c)).norm();
    EXPECT_LT(err, 5.0 * s.cluster_std / std::sqrt(static_cast<double>(s.samples_per_class)));
  }
}

TEST(Data, RotationOpensADomainGap) {
  SyntheticSpec s = small_spec();
  s.samples_per_class = 200;
  s.shift = AffineShift::rotation(2, 30.0, 0.1);
  const SyntheticDomains d = make_synthetic_domains(s, 0);
  auto [train, test] = train_test_split(d.source, 0.8, 1);
  SourceTrainOptions opt;
  const Classifier m = train_source(Classifier({{2, 32, 32}, Activation::Relu}, 6, 2), train, opt);
  EXPECT_LT(accuracy(m, d.target), accuracy(m, test));
}

TEST(Data, RejectsSingularShiftsAndTinyLabelSpaces) {
  SyntheticSpec s = small_spec();
  s.shift = {Matrix::Zero(2, 2), Vector::Zero(2)};
  EXPECT_THROW(make_synthetic_domains(s, 0), InvalidArgument);
  s = small_spec();
  s.num_classes = 3;
  EXPECT_THROW(make_synthetic_domains(s, 0), InvalidArgument);
  EXPECT_THROW(AffineShift::identity(3).validate(2), InvalidArgument);
}

TEST(Data, RetainForgetSplitIsAPartition) {
  const DomainDataset src = make_synthetic_domains(small_spec(), 0).source;
  auto [retain, forget] = split_retain_forget(src, {{1}, 0.8});
  EXPECT_EQ(forget.size(), 100);
  EXPECT_EQ(retain.size(), 500);
  const std::set<int> rc = retain.class_set();
  const std::set<int> fc = forget.class_set();
  std::set<int> both;
  std::set_intersection(rc.begin(), rc.end(), fc.begin(), fc.end(), std::inserter(both, both.begin()));
  EXPECT_TRUE(both.empty());

  auto [all, none] = split_retain_forget(src, {{}, 0.8});
  EXPECT_EQ(all.size(), src.size());
  EXPECT_TRUE(none.empty());
  EXPECT_THROW(split_retain_forget(src, {{0, 1, 2, 3, 4, 5}, 0.8}), InvalidArgument);
  EXPECT_THROW(split_retain_forget(src, {{9}, 0.8}), InvalidArgument);
}

TEST(Data, StratifiedSplitIsDeterministic) {
  const DomainDataset src = make_synthetic_domains(small_spec(), 0).source;
  auto [train, test] = train_test_split(src, 0.8, 7);
  for (auto [label, n] : counts(train)) EXPECT_EQ(n, 80) << label;
  for (auto [label, n] : counts(test)) EXPECT_EQ(n, 20) << label;
  auto [train2, test2] = train_test_split(src, 0.8, 7);
  EXPECT_EQ(train.inputs, train2.inputs);
  EXPECT_EQ(test.labels, test2.labels);
}

TEST(Data, TwoSampleClassSplitsOneOne) {
  DomainDataset ds{Matrix::Zero(2, 1), {0, 0}, Domain::Source};
  auto [train, test] = train_test_split(ds, 0.5, 0);
  EXPECT_EQ(train.size(), 1);
  EXPECT_EQ(test.size(), 1);
  DomainDataset one{Matrix::Zero(1, 1), {0}, Domain::Source};
  EXPECT_THROW(train_test_split(one, 0.5, 0), InvalidArgument);
  EXPECT_THROW(train_test_split(ds, 1.0, 0), InvalidArgument);
}

TEST(Data, OodClustersAvoidReferenceCenters) {
  const SyntheticDomains d = make_synthetic_domains(small_spec(), 2);
  OodSpec o;
  o.num_classes = 4;
  o.samples_per_class = 400;
  o.cluster_std = 0.1;
  o.center_spread = 0.8;
  o.min_distance = 5.0;
  o.reference_centers = d.source_centers;
  const DomainDataset ood = sample_ood_classes(o, 9);
  EXPECT_EQ(ood.size(), 1600);
  for (int k = 0; k < 4; ++k) {
    EXPECT_LT(ood_label(k), 0);
    const DomainDataset cls = ood.filter({ood_label(k)});
    const Eigen::RowVectorXd mean = cls.inputs.colwise().mean();
    // Sample mean is within a few standard errors of the true center.
    for (int c = 0; c < 6; ++c) EXPECT_GE((mean - d.source_centers.row(c)).norm(), 0.5 - 0.03);
  }
  EXPECT_EQ(sample_ood_classes(o, 9).inputs, ood.inputs);
  o.num_classes = 0;
  EXPECT_TRUE(sample_ood_classes(o, 9).empty());
}

TEST(Data, AdaptationViewCarriesNoLabels) {
  const DomainDataset t = make_synthetic_domains(small_spec(), 0).target;
  const UnlabeledDataset u = t.adaptation_view();
  EXPECT_EQ(u.inputs, t.inputs);
  EXPECT_EQ(u.domain, Domain::Target);
}

TEST(Data, CsvRoundTrip) {
  const DomainDataset src = make_synthetic_domains(small_spec(), 0).source;
  const auto path = std::filesystem::temp_directory_path() / "scada_data_test.csv";
  write_csv(src, path);
  const DomainDataset back = read_csv(path);
  EXPECT_EQ(back.inputs, src.inputs);
  EXPECT_EQ(back.labels, src.labels);
  EXPECT_EQ(back.domain, src.domain);
  std::filesystem::remove(path);
}

TEST(Data, SampleIndicesAreDistinctAndSorted) {
  const auto idx = sample_indices(50, 20, 3);
  EXPECT_EQ(idx.size(), 20u);
  EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
  EXPECT_EQ(std::adjacent_find(idx.begin(), idx.end()), idx.end());
  EXPECT_THROW(sample_indices(5, 6, 0), InvalidArgument);
}
