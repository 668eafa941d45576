#pragma once

#include "scada/data.hpp"
#include "scada/model.hpp"
#include "scada/training.hpp"

namespace scada::testing {

/// Well separated 2-d blobs, a source model trained without label smoothing
/// and the retain part of the target as the unlabeled adaptation set.
struct ToyWorld {
  SyntheticDomains domains;
  Classifier source;
  UnlabeledDataset target_retain;
};

inline ToyWorld make_toy_world(int num_classes, const std::set<int>& forget, std::uint64_t seed = 0,
                               Activation act = Activation::Tanh) {
  SyntheticSpec spec;
  spec.num_classes = num_classes;
  spec.dim = 2;
  spec.samples_per_class = 60;
  spec.cluster_std = 0.1;
  spec.center_spread = 1.0;
  spec.min_center_distance = 8.0;
  spec.shift = AffineShift::rotation(2, 10.0, 0.05);
  SyntheticDomains d = make_synthetic_domains(spec, seed);
  SourceTrainOptions opt;
  opt.smoothing = 0.0;
  opt.epochs = 20;
  opt.seed = seed;
  Classifier m = train_source(Classifier({{2, 16, 16}, act}, num_classes, seed + 1), d.source, opt);
  std::set<int> retain;
  for (int c = 0; c < num_classes; ++c)
    if (!forget.count(c)) retain.insert(c);
  UnlabeledDataset t = d.target.filter(retain).adaptation_view();
  return {std::move(d), std::move(m), std::move(t)};
}

}  // namespace scada::testing
