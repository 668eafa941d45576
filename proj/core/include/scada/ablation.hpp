#pragma once

#include <map>
#include <string>
#include <vector>

#include "scada/data.hpp"
#include "scada/metrics.hpp"
#include "scada/sfda.hpp"
#include "scada/unlearn.hpp"

namespace scada {

/// Runs the full unlearning pipeline once per labeling strategy with the same
/// seed and evaluates each result. `sfda` is cloned for every run.
std::map<LabelStrategy, MetricsReport> labeling_ablation(const Classifier& source, const UnlabeledDataset& target,
                                                         const std::vector<int>& forget_classes,
                                                         const std::vector<LabelStrategy>& strategies,
                                                         const SfdaLoss& sfda, const UnlearnConfig& cfg,
                                                         const EvalSets& eval, const MetricOptions& options = {});

enum class Stage {
  Before,  // unlearning-only steps on the source model, then adaptation
  During,  // joint unlearning and adaptation
  After,   // adaptation, then unlearning-only steps
};

std::string to_string(Stage s);
Stage stage_from_string(const std::string& name);

struct StageResult {
  Classifier model;
  MetricsReport report;
};

StageResult stage_ablation(const Classifier& source, const UnlabeledDataset& target,
                           const std::vector<int>& forget_classes, Stage stage, const SfdaLoss& sfda,
                           const UnlearnConfig& cfg, const EvalSets& eval, const MetricOptions& options = {});

}  // namespace scada
