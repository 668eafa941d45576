#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "scada/data.hpp"
#include "scada/losses.hpp"
#include "scada/model.hpp"
#include "scada/optim.hpp"
#include "scada/sfda.hpp"
#include "scada/verify.hpp"

namespace scada {

/// Target label used on adversarial samples during unlearning.
enum class LabelStrategy {
  Rescaled,  // zero the forget class, renormalize the rest proportionally
  Uniform,   // uniform over the non-forget classes
  Random,    // one-hot on a randomly drawn non-forget class, redrawn each step
};

std::string to_string(LabelStrategy s);
LabelStrategy label_strategy_from_string(const std::string& name);

struct UnlearnConfig {
  double alpha = 10.0;  // weight of the unlearning loss
  SgdOptions sgd;       // sgd.lr is the model step size
  double eta_adv = 0.1;     // adversarial-sample step size during training
  double eta_init = 0.5;    // adversarial-sample step size during initialization
  int init_steps = 500;     // gradient steps of the initialization
  double init_std = 1.0;    // std of the random starting point
  double init_confidence = 0.99;
  int epochs = 5;
  int steps_per_epoch = 200;
  int num_adv = 4;
  int batch_size = 64;
  LabelStrategy strategy = LabelStrategy::Rescaled;
  /// Optional box constraint on adversarial inputs.
  std::optional<std::pair<double, double>> clamp;
  /// Audit the gradient-flow inequality on every k-th step (0 disables).
  int audit_every = 10;
  std::uint64_t seed = 0;

  /// Throws ConfigError for non-positive step sizes, negative alpha, etc.
  void validate() const;
};

/// Adversarial inputs per forget class, optimized in place across training.
class AdversarialBank {
 public:
  void insert(int forget_class, Matrix samples);
  bool contains(int forget_class) const { return entries_.count(forget_class) > 0; }
  Matrix& samples(int forget_class);
  const Matrix& samples(int forget_class) const;
  long steps(int forget_class) const;
  void count_step(int forget_class);
  std::vector<int> classes() const;
  bool empty() const { return entries_.empty(); }
  /// All samples of all classes stacked (class order ascending).
  Matrix stacked() const;

 private:
  struct Entry {
    Matrix samples;
    long steps = 0;
  };
  std::map<int, Entry> entries_;
};

/// Probability vector with the forget class at exactly zero.
struct RescaledLabel {
  Vector probs;
};

/// Cross-entropy of adversarial inputs towards the forget class.
struct AdvLoss {
  double value = 0.0;  // mean over rows
  Matrix input_grad;   // row i: gradient of sample i's own cross-entropy
};

/// CE(model(x_hat), one-hot forget_class) with its input gradient.
AdvLoss adv_loss(const Classifier& model, const Matrix& x_hat, int forget_class);

/// num_adv random starting points, each followed by init_steps gradient steps
/// on adv_loss. Logs a warning if the confidence target is not reached.
Matrix init_adversarial_samples(const Classifier& model, int forget_class, const UnlearnConfig& cfg);

/// Zeroes the forget entry of `y` and renormalizes the remainder. Throws
/// DegenerateLabelError when the remaining mass is zero.
RescaledLabel rescale_labels(const Vector& y, int forget_class);

/// Uniform over every class except `forget_class`.
RescaledLabel uniform_over_retain(int num_classes, int forget_class);

/// Mean cross-entropy between model(x_hat row i) and targets[i]. The targets
/// are constants: no gradient flows through them.
ParamLoss mu_loss(const Classifier& model, const Matrix& x_hat, const std::vector<RescaledLabel>& targets);

/// One record per combined step.
struct StepRecord {
  long step = 0;
  int epoch = 0;
  int forget_class = 0;
  double sfda_loss = 0.0;
  double mu_loss = 0.0;
  double adv_loss = 0.0;
  double delta = 0.0;  // mean non-forget softmax mass on the adversarial samples
  double learning_rate = 0.0;
  bool label_fallback = false;
  std::vector<GradientFlowAudit> audits;  // one per adversarial sample when audited
};

/// JSON-lines writer for step records.
class TraceWriter {
 public:
  explicit TraceWriter(const std::filesystem::path& path);
  void write(const StepRecord& record);

 private:
  std::ofstream out_;
};

struct RunHooks {
  TraceWriter* trace = nullptr;
  std::function<void(const StepRecord&)> on_step;
};

/// Mutable state of one unlearning run.
struct StepContext {
  Classifier& model;
  Sgd& optimizer;
  AdversarialBank& bank;
  const SfdaLoss& sfda;
  const UnlearnConfig& cfg;
  std::mt19937_64& rng;
};

/// (a) label the adversarial samples of `forget_class`, (b) one optimizer step
/// on L_SFDA + alpha * L_MU, (c) one gradient step on every adversarial sample
/// towards the forget class. Throws NumericalError if a loss is not finite.
StepRecord combined_step(StepContext& ctx, const TargetBatch& batch, int forget_class, bool audit);

struct ScadaResult {
  Classifier model;
  AdversarialBank bank;
  std::vector<StepRecord> history;
};

/// Adversarial-optimization unlearning during source-free adaptation. Banks
/// for all forget classes are initialized against `source` before training;
/// every epoch gives each forget class steps_per_epoch / |C_F| combined steps.
/// Throws InvalidArgument for an empty forget set, one covering every class,
/// or out-of-range classes.
ScadaResult run_scada_ul(const Classifier& source, const UnlabeledDataset& target,
                         const std::vector<int>& forget_classes, SfdaLoss& sfda,
                         const UnlearnConfig& cfg, const RunHooks& hooks = {});

/// Adaptation with the SFDA loss alone, using the same optimizer, epochs and
/// steps as run_scada_ul.
Classifier run_sfda_only(const Classifier& source, const UnlabeledDataset& target, SfdaLoss& sfda,
                         const UnlearnConfig& cfg);

/// 64-bit mix used to derive independent seeds from (seed, stream) pairs.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace scada
