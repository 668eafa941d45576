#pragma once

#include <vector>

#include "scada/data.hpp"
#include "scada/model.hpp"
#include "scada/sfda.hpp"
#include "scada/unlearn.hpp"

namespace scada {

/// Softmax mass accumulated per class over a dataset.
struct GammaVector {
  Vector accumulation;
  Eigen::Index num_samples = 0;
};

/// gamma_c = sum over samples of softmax_c. Each class column is summed in
/// sorted order, so the result does not depend on sample order.
/// Throws InvalidArgument on an empty dataset.
GammaVector estimate_gamma(const Classifier& model, const UnlabeledDataset& target);

/// The R * num_forget classes with the smallest gamma, ascending by gamma with
/// ties broken by class index. Throws InvalidArgument unless
/// 0 < R * num_forget < d.
std::vector<int> predict_forget_classes(const GammaVector& gamma, int num_forget, int ratio);

struct UnknownClassResult {
  GammaVector gamma;
  std::vector<int> predicted;
  ScadaResult run;
};

/// Forget classes unknown, their count known: rank classes by gamma under the
/// source model, then unlearn the bottom ratio * num_forget of them.
UnknownClassResult run_uc_scada(const Classifier& source, const UnlabeledDataset& target, int num_forget,
                                SfdaLoss& sfda, const UnlearnConfig& cfg, int ratio = 3,
                                const RunHooks& hooks = {});

struct ForgetRequestSequence {
  std::vector<std::vector<int>> requests;
  double subset_fraction = 0.25;  // share of target data used after the first request
  int later_epochs = -1;          // < 0 means max(1, epochs / 2)

  /// Throws InvalidArgument for empty or overlapping requests, classes out of
  /// range, or a union that covers every class.
  void validate(int num_classes) const;
};

struct ContinualResult {
  std::vector<ScadaResult> stages;  // one per request, in order

  const Classifier& final_model() const { return stages.back().model; }
};

/// Sequential unlearning requests. The first request runs from the source
/// model on all target data; each later one continues from the previous
/// result on a random subset with a reduced epoch budget.
ContinualResult run_c_scada(const Classifier& source, const UnlabeledDataset& target,
                            const ForgetRequestSequence& sequence, SfdaLoss& sfda, const UnlearnConfig& cfg,
                            const RunHooks& hooks = {});

}  // namespace scada
