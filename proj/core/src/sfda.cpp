#include "scada/sfda.hpp"

#include <limits>

#include "scada/error.hpp"

namespace scada {

namespace {

void require_batch(const TargetBatch& batch) {
  if (batch.size() == 0) throw InvalidArgument("SFDA loss on an empty batch");
}

ParamLoss without_head(const Classifier& model, ParamLoss loss, bool freeze) {
  if (freeze) loss.grad.tail(model.num_parameters() - model.head_offset()).setZero();
  return loss;
}

}  // namespace

ParamLoss ShotLikeLoss::compute(const Classifier& model, const TargetBatch& batch) const {
  require_batch(batch);
  const ForwardPass pass = model.forward(batch.inputs);
  const LogitLoss ent = mean_entropy(pass.logits);
  const LogitLoss div = marginal_entropy(pass.logits);
  LogitLoss total{ent.value - options_.beta * div.value, ent.dlogits - options_.beta * div.dlogits};

  if (options_.lambda != 0.0) {
    if (pseudo_labels_.empty()) throw InvalidArgument("shot_like loss used before refresh()");
    if (static_cast<Eigen::Index>(batch.indices.size()) != batch.size())
      throw InvalidArgument("batch indices do not match batch size");
    std::vector<int> labels;
    labels.reserve(batch.indices.size());
    for (auto idx : batch.indices) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= pseudo_labels_.size())
        throw InvalidArgument("batch index outside the refreshed dataset");
      labels.push_back(pseudo_labels_[static_cast<std::size_t>(idx)]);
    }
    const LogitLoss ce = cross_entropy(pass.logits, labels);
    total.value += options_.lambda * ce.value;
    total.dlogits += options_.lambda * ce.dlogits;
  }
  return without_head(model, backprop(model, pass, total), options_.freeze_head);
}

ShotLikeLoss::Terms ShotLikeLoss::terms(const Classifier& model, const TargetBatch& batch) const {
  require_batch(batch);
  const ForwardPass pass = model.forward(batch.inputs);
  Terms t;
  t.entropy = mean_entropy(pass.logits).value;
  t.diversity = marginal_entropy(pass.logits).value;
  if (!pseudo_labels_.empty()) {
    std::vector<int> labels;
    for (auto idx : batch.indices) labels.push_back(pseudo_labels_.at(static_cast<std::size_t>(idx)));
    t.pseudo_ce = cross_entropy(pass.logits, labels).value;
  }
  return t;
}

void ShotLikeLoss::refresh(const Classifier& model, const UnlabeledDataset& target) {
  if (target.size() == 0) {
    pseudo_labels_.clear();
    return;
  }
  const ForwardPass pass = model.forward(target.inputs);
  pseudo_labels_ = refine_pseudo_labels(pass.features(), pass.probs);
}

ParamLoss EntropyOnlyLoss::compute(const Classifier& model, const TargetBatch& batch) const {
  require_batch(batch);
  const ForwardPass pass = model.forward(batch.inputs);
  const LogitLoss ent = mean_entropy(pass.logits);
  const LogitLoss div = marginal_entropy(pass.logits);
  return without_head(model, backprop(model, pass, {ent.value - beta_ * div.value, ent.dlogits - beta_ * div.dlogits}),
                      freeze_head_);
}

ParamLoss NullSfdaLoss::compute(const Classifier& model, const TargetBatch& batch) const {
  require_batch(batch);
  return {0.0, Vector::Zero(model.num_parameters())};
}

std::vector<int> refine_pseudo_labels(const Matrix& features, const Matrix& probs) {
  if (features.rows() != probs.rows()) throw InvalidArgument("features and probabilities disagree on sample count");
  const Eigen::Index n = probs.rows();
  const Eigen::Index d = probs.cols();
  std::vector<int> labels(static_cast<std::size_t>(n));
  if (n == 0) return labels;

  // Centroids weighted by the current soft assignment.
  const Vector mass = probs.colwise().sum().transpose();
  const Matrix centroids = probs.transpose() * features;
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index arg = 0;
    probs.row(i).maxCoeff(&arg);  // argmax pseudo-label, kept if no centroid is usable
    for (Eigen::Index c = 0; c < d; ++c) {
      if (!(mass[c] > 1e-12)) continue;
      const double dist = (features.row(i) - centroids.row(c) / mass[c]).squaredNorm();
      if (dist < best) {
        best = dist;
        arg = c;
      }
    }
    labels[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return labels;
}

std::unique_ptr<SfdaLoss> make_sfda_loss(const std::string& name, const ShotOptions& options) {
  if (name == "shot_like") return std::make_unique<ShotLikeLoss>(options);
  if (name == "entropy_only") return std::make_unique<EntropyOnlyLoss>(options.beta, options.freeze_head);
  if (name == "none") return std::make_unique<NullSfdaLoss>();
  throw ConfigError("unknown SFDA loss '" + name + "' (expected shot_like | entropy_only | none)");
}

}  // namespace scada
