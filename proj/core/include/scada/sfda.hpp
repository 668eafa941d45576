#pragma once

#include <memory>
#include <string>
#include <vector>

#include "scada/data.hpp"
#include "scada/losses.hpp"
#include "scada/model.hpp"

namespace scada {

/// A mini-batch of unlabeled target inputs. `indices` locate each row in the
/// dataset most recently passed to SfdaLoss::refresh().
struct TargetBatch {
  Matrix inputs;
  std::vector<Eigen::Index> indices;

  Eigen::Index size() const { return inputs.rows(); }
};

/// Source-free adaptation objective. Implementations see unlabeled inputs
/// only; any internal state (pseudo-labels) is rebuilt by refresh().
class SfdaLoss {
 public:
  virtual ~SfdaLoss() = default;

  virtual std::string name() const = 0;
  /// Differentiable loss on one batch. Throws InvalidArgument on an empty batch.
  virtual ParamLoss compute(const Classifier& model, const TargetBatch& batch) const = 0;
  virtual void refresh(const Classifier& model, const UnlabeledDataset& target) = 0;
  /// Fresh copy including current state.
  virtual std::unique_ptr<SfdaLoss> clone() const = 0;
};

struct ShotOptions {
  double beta = 1.0;    // weight of the diversity term
  double lambda = 0.3;  // weight of the pseudo-label cross-entropy
  /// Keep the classifier head fixed: the loss gradient is zeroed on head
  /// parameters, so only the feature extractor adapts.
  bool freeze_head = true;
};

/// Information maximization plus self-training:
///   H_ent - beta * H_div + lambda * CE(pseudo-labels)
/// Pseudo-labels come from argmax predictions refined by one round of
/// nearest-centroid assignment in feature space.
class ShotLikeLoss final : public SfdaLoss {
 public:
  struct Terms {
    double entropy = 0.0;
    double diversity = 0.0;
    double pseudo_ce = 0.0;
  };

  explicit ShotLikeLoss(ShotOptions options = {}) : options_(options) {}

  std::string name() const override { return "shot_like"; }
  ParamLoss compute(const Classifier& model, const TargetBatch& batch) const override;
  void refresh(const Classifier& model, const UnlabeledDataset& target) override;
  std::unique_ptr<SfdaLoss> clone() const override { return std::make_unique<ShotLikeLoss>(*this); }

  Terms terms(const Classifier& model, const TargetBatch& batch) const;
  const std::vector<int>& pseudo_labels() const { return pseudo_labels_; }
  const ShotOptions& options() const { return options_; }

 private:
  ShotOptions options_;
  std::vector<int> pseudo_labels_;
};

/// H_ent - beta * H_div with no pseudo-label term; refresh() is a no-op.
class EntropyOnlyLoss final : public SfdaLoss {
 public:
  explicit EntropyOnlyLoss(double beta = 1.0, bool freeze_head = true) : beta_(beta), freeze_head_(freeze_head) {}

  std::string name() const override { return "entropy_only"; }
  ParamLoss compute(const Classifier& model, const TargetBatch& batch) const override;
  void refresh(const Classifier&, const UnlabeledDataset&) override {}
  std::unique_ptr<SfdaLoss> clone() const override { return std::make_unique<EntropyOnlyLoss>(*this); }

 private:
  double beta_;
  bool freeze_head_;
};

/// Constant zero; turns a combined step into an unlearning-only step.
class NullSfdaLoss final : public SfdaLoss {
 public:
  std::string name() const override { return "none"; }
  ParamLoss compute(const Classifier& model, const TargetBatch& batch) const override;
  void refresh(const Classifier&, const UnlabeledDataset&) override {}
  std::unique_ptr<SfdaLoss> clone() const override { return std::make_unique<NullSfdaLoss>(*this); }
};

/// Argmax pseudo-labels followed by one round of centroid refinement:
/// centroids are softmax-weighted feature means and each sample moves to the
/// nearest (Euclidean) centroid.
std::vector<int> refine_pseudo_labels(const Matrix& features, const Matrix& probs);

/// "shot_like" | "entropy_only" | "none". Throws ConfigError otherwise.
std::unique_ptr<SfdaLoss> make_sfda_loss(const std::string& name, const ShotOptions& options = {});

}  // namespace scada
