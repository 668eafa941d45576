#include "scada/ablation.hpp"

#include <chrono>

#include "scada/error.hpp"

namespace scada {

namespace {

MetricsReport timed_report(const Classifier& model, const EvalSets& eval, const MetricOptions& options,
                           std::string method, std::uint64_t seed, std::chrono::steady_clock::time_point start) {
  MetricsReport r = evaluate(model, eval, options);
  r.method = std::move(method);
  r.seed = seed;
  r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace

std::map<LabelStrategy, MetricsReport> labeling_ablation(const Classifier& source, const UnlabeledDataset& target,
                                                         const std::vector<int>& forget_classes,
                                                         const std::vector<LabelStrategy>& strategies,
                                                         const SfdaLoss& sfda, const UnlearnConfig& cfg,
                                                         const EvalSets& eval, const MetricOptions& options) {
  if (strategies.empty()) throw InvalidArgument("no labeling strategies given");
  std::map<LabelStrategy, MetricsReport> out;
  for (LabelStrategy s : strategies) {
    const auto start = std::chrono::steady_clock::now();
    UnlearnConfig run_cfg = cfg;
    run_cfg.strategy = s;
    auto loss = sfda.clone();
    const ScadaResult r = run_scada_ul(source, target, forget_classes, *loss, run_cfg);
    out[s] = timed_report(r.model, eval, options, "label_" + to_string(s), cfg.seed, start);
  }
  return out;
}

std::string to_string(Stage s) {
  switch (s) {
    case Stage::Before:
      return "before";
    case Stage::During:
      return "during";
    case Stage::After:
      return "after";
  }
  return "unknown";
}

Stage stage_from_string(const std::string& name) {
  if (name == "before") return Stage::Before;
  if (name == "during") return Stage::During;
  if (name == "after") return Stage::After;
  throw ConfigError("unknown stage '" + name + "'");
}

StageResult stage_ablation(const Classifier& source, const UnlabeledDataset& target,
                           const std::vector<int>& forget_classes, Stage stage, const SfdaLoss& sfda,
                           const UnlearnConfig& cfg, const EvalSets& eval, const MetricOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  auto loss = sfda.clone();
  NullSfdaLoss none;
  Classifier model = source;
  switch (stage) {
    case Stage::Before:
      model = run_scada_ul(source, target, forget_classes, none, cfg).model;
      model = run_sfda_only(model, target, *loss, cfg);
      break;
    case Stage::During:
      model = run_scada_ul(source, target, forget_classes, *loss, cfg).model;
      break;
    case Stage::After:
      model = run_sfda_only(source, target, *loss, cfg);
      model = run_scada_ul(model, target, forget_classes, none, cfg).model;
      break;
  }
  MetricsReport report = timed_report(model, eval, options, "stage_" + to_string(stage), cfg.seed, start);
  return {std::move(model), std::move(report)};
}

}  // namespace scada
