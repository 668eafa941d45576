#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scada/ablation.hpp"
#include "scada/data.hpp"
#include "scada/metrics.hpp"
#include "scada/model.hpp"
#include "scada/sfda.hpp"
#include "scada/training.hpp"
#include "scada/unlearn.hpp"
#include "scada/variants.hpp"

namespace scada {

enum class Method { Original, Retrain, Finetune, Scada, UcScada, CScada };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

/// Desk-scale defaults: six unit-scale blobs in 16 dimensions. The target is
/// rotated by 15 degrees in each coordinate pair (see DatasetConfig).
inline SyntheticSpec default_synthetic_spec() {
  SyntheticSpec s;
  s.num_classes = 6;
  s.dim = 16;
  s.samples_per_class = 200;
  s.cluster_std = 0.1;
  s.center_spread = 0.8;
  s.min_center_distance = 8.0;
  return s;
}

/// Unlearning defaults with a smaller model step size than the optimizer's own default.
inline UnlearnConfig default_unlearn_config() {
  UnlearnConfig u;
  u.sgd.lr = 1e-3;
  return u;
}

struct DatasetConfig {
  SyntheticSpec synthetic = default_synthetic_spec();
  double rotation_deg = 15.0;
  double translation = 0.1;
  double train_fraction = 0.8;
  int ood_classes = 4;
  int ood_samples_per_class = 50;
};

struct AblationConfig {
  std::vector<LabelStrategy> strategies{LabelStrategy::Rescaled, LabelStrategy::Uniform, LabelStrategy::Random};
  std::vector<Stage> stages{Stage::Before, Stage::During, Stage::After};
};

struct ExperimentConfig {
  DatasetConfig dataset;
  Architecture arch{{16, 32, 32}, Activation::Tanh};
  SourceTrainOptions source;
  std::string sfda_loss = "shot_like";
  ShotOptions shot;
  Method method = Method::Scada;
  /// True forget classes: absent from the target, evaluated as the forget set.
  /// For c_scada this is the union of the requests.
  std::vector<int> forget_classes{1};
  int uc_ratio = 3;
  ForgetRequestSequence requests;
  /// Share of the target adaptation data used by the finetune baseline.
  double finetune_fraction = 0.5;
  UnlearnConfig unlearn = default_unlearn_config();
  MetricOptions metrics;
  AblationConfig ablation;
  std::filesystem::path output_dir = "scada_out";
  std::vector<std::uint64_t> seeds{0, 1, 2};
  bool trace = false;
  bool plots = true;

  /// Throws ConfigError on any inconsistency.
  void validate() const;
};

/// Parses a JSON document. Missing fields keep their defaults; unknown fields
/// and malformed values raise ConfigError.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& cfg, int indent = 2);

/// FNV-1a over the canonical (key-sorted) JSON form, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

/// Data and source model for one seed.
struct World {
  SyntheticDomains domains;
  DomainDataset source_train;
  DomainDataset source_test;
  DomainDataset target_train;  // labeled; adaptation only sees `target_adapt`
  DomainDataset target_test;
  UnlabeledDataset target_adapt;  // retain classes only, labels stripped
  EvalSets eval;
  DomainDataset ood;
  Classifier source_model;
};

World prepare_world(const ExperimentConfig& cfg, std::uint64_t seed);

/// Evaluation sets restricted to a different forget set (used per continual stage).
EvalSets eval_sets_for(const World& world, const std::vector<int>& forget_classes);

UnlearnConfig seeded(const UnlearnConfig& cfg, std::uint64_t seed);

/// Adaptation of the source model with no unlearning.
Classifier run_original(const ExperimentConfig& cfg, const World& world, std::uint64_t seed);
/// Source model retrained without the forget classes, then adapted.
Classifier run_retrain_oracle(const ExperimentConfig& cfg, const World& world, std::uint64_t seed);
/// Adaptation on a random subset of the target data, no unlearning.
Classifier run_finetune_baseline(const ExperimentConfig& cfg, const World& world, std::uint64_t seed);

struct SeedOutcome {
  std::vector<MetricsReport> reports;  // one, or one per stage for c_scada
  std::vector<StepRecord> history;     // unlearning methods only
  std::optional<Classifier> model;
  std::optional<AdversarialBank> bank;
  std::vector<int> predicted_forget;   // uc_scada only
};

SeedOutcome run_method(const ExperimentConfig& cfg, const World& world, std::uint64_t seed,
                       const RunHooks& hooks = {});

/// Runs every seed, writes per-seed JSON, results.csv, summary.csv and (when
/// enabled) traces and loss plots to cfg.output_dir.
std::vector<MetricsReport> run_experiment(const ExperimentConfig& cfg);

/// Labeling and stage ablations for every seed; writes ablation.csv.
std::vector<MetricsReport> run_ablation(const ExperimentConfig& cfg);

struct AuditSummary {
  long audits = 0;
  long holds = 0;
  double max_closed_form_error = 0.0;
  double min_delta = 1.0;
  double max_delta = 0.0;
};

/// Runs the unlearning method with every step audited; writes verify.json.
AuditSummary run_verify(const ExperimentConfig& cfg);

/// Rebuilds results.csv and summary.csv from the per-seed JSON files in `dir`.
std::vector<MetricsReport> rebuild_report(const std::filesystem::path& dir);

void write_results_csv(const std::vector<MetricsReport>& reports, const std::filesystem::path& path);
/// Mean and sample standard deviation per method.
void write_summary_csv(const std::vector<MetricsReport>& reports, const std::filesystem::path& path);

}  // namespace scada
