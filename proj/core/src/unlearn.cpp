#include "scada/unlearn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "scada/error.hpp"

namespace scada {

std::string to_string(LabelStrategy s) {
  switch (s) {
    case LabelStrategy::Rescaled:
      return "rescaled";
    case LabelStrategy::Uniform:
      return "uniform";
    case LabelStrategy::Random:
      return "random";
  }
  return "unknown";
}

LabelStrategy label_strategy_from_string(const std::string& name) {
  if (name == "rescaled") return LabelStrategy::Rescaled;
  if (name == "uniform") return LabelStrategy::Uniform;
  if (name == "random") return LabelStrategy::Random;
  throw ConfigError("unknown labeling strategy '" + name + "'");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void UnlearnConfig::validate() const {
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
  if (!(sgd.lr > 0.0) || !(eta_adv > 0.0) || !(eta_init > 0.0)) throw ConfigError("step sizes must be positive");
  if (init_steps < 0 || epochs < 0) throw ConfigError("init_steps and epochs must be non-negative");
  if (steps_per_epoch < 1 || num_adv < 1 || batch_size < 1)
    throw ConfigError("steps_per_epoch, num_adv and batch_size must be positive");
  if (!(init_confidence > 0.0 && init_confidence <= 1.0)) throw ConfigError("init_confidence must lie in (0, 1]");
  if (clamp && !(clamp->first < clamp->second)) throw ConfigError("clamp range is empty");
  if (audit_every < 0) throw ConfigError("audit_every must be non-negative");
}

// --- AdversarialBank -------------------------------------------------------

void AdversarialBank::insert(int forget_class, Matrix samples) { entries_[forget_class] = {std::move(samples), 0}; }

Matrix& AdversarialBank::samples(int forget_class) {
  auto it = entries_.find(forget_class);
  if (it == entries_.end()) throw InvalidArgument("no adversarial samples for class " + std::to_string(forget_class));
  return it->second.samples;
}

const Matrix& AdversarialBank::samples(int forget_class) const {
  auto it = entries_.find(forget_class);
  if (it == entries_.end()) throw InvalidArgument("no adversarial samples for class " + std::to_string(forget_class));
  return it->second.samples;
}

long AdversarialBank::steps(int forget_class) const {
  auto it = entries_.find(forget_class);
  return it == entries_.end() ? 0 : it->second.steps;
}

void AdversarialBank::count_step(int forget_class) { ++entries_.at(forget_class).steps; }

std::vector<int> AdversarialBank::classes() const {
  std::vector<int> out;
  for (const auto& [c, _] : entries_) out.push_back(c);
  return out;
}

Matrix AdversarialBank::stacked() const {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  for (const auto& [_, e] : entries_) {
    rows += e.samples.rows();
    cols = e.samples.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index r = 0;
  for (const auto& [_, e] : entries_) {
    out.middleRows(r, e.samples.rows()) = e.samples;
    r += e.samples.rows();
  }
  return out;
}

// --- losses ----------------------------------------------------------------

namespace {

void check_class(const Classifier& model, int c) {
  if (c < 0 || c >= model.num_classes())
    throw InvalidArgument("class " + std::to_string(c) + " outside [0, " + std::to_string(model.num_classes()) + ")");
}

void apply_clamp(Matrix& x, const UnlearnConfig& cfg) {
  if (cfg.clamp) x = x.cwiseMax(cfg.clamp->first).cwiseMin(cfg.clamp->second);
}

}  // namespace

AdvLoss adv_loss(const Classifier& model, const Matrix& x_hat, int forget_class) {
  check_class(model, forget_class);
  if (x_hat.rows() == 0) throw InvalidArgument("no adversarial samples");
  const ForwardPass pass = model.forward(x_hat);
  const Matrix logp = log_softmax(pass.logits);
  AdvLoss out;
  out.value = -logp.col(forget_class).mean();
  Matrix dlogits = pass.probs;  // per-sample gradient of its own cross-entropy
  dlogits.col(forget_class).array() -= 1.0;
  out.input_grad = model.backward(pass, dlogits).inputs;
  return out;
}

Matrix init_adversarial_samples(const Classifier& model, int forget_class, const UnlearnConfig& cfg) {
  check_class(model, forget_class);
  Matrix x(cfg.num_adv, model.input_dim());
  for (int i = 0; i < cfg.num_adv; ++i) {
    std::mt19937_64 rng(derive_seed(cfg.seed, (static_cast<std::uint64_t>(forget_class) << 20) + static_cast<std::uint64_t>(i)));
    std::normal_distribution<double> normal(0.0, cfg.init_std);
    for (int j = 0; j < model.input_dim(); ++j) x(i, j) = normal(rng);
  }
  apply_clamp(x, cfg);
  for (int t = 0; t < cfg.init_steps; ++t) {
    x -= cfg.eta_init * adv_loss(model, x, forget_class).input_grad;
    apply_clamp(x, cfg);
  }
  const double confidence = model.predict_proba(x).col(forget_class).minCoeff();
  if (confidence < cfg.init_confidence)
    spdlog::warn("adversarial init for class {}: min confidence {:.4f} below target {:.4f} after {} steps", forget_class,
                 confidence, cfg.init_confidence, cfg.init_steps);
  return x;
}

RescaledLabel rescale_labels(const Vector& y, int forget_class) {
  if (forget_class < 0 || forget_class >= y.size()) throw InvalidArgument("forget class out of range");
  double rest = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (i != forget_class) rest += y[i];
  if (!(rest > 0.0)) throw DegenerateLabelError("degenerate forget confidence: no mass outside the forget class");
  RescaledLabel out{y / rest};
  out.probs[forget_class] = 0.0;
  return out;
}

RescaledLabel uniform_over_retain(int num_classes, int forget_class) {
  if (num_classes < 2 || forget_class < 0 || forget_class >= num_classes) throw InvalidArgument("invalid label space");
  RescaledLabel out{Vector::Constant(num_classes, 1.0 / (num_classes - 1))};
  out.probs[forget_class] = 0.0;
  return out;
}

ParamLoss mu_loss(const Classifier& model, const Matrix& x_hat, const std::vector<RescaledLabel>& targets) {
  if (static_cast<Eigen::Index>(targets.size()) != x_hat.rows())
    throw InvalidArgument("one target per adversarial sample required");
  Matrix t(x_hat.rows(), model.num_classes());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i].probs.size() != model.num_classes()) throw InvalidArgument("target length mismatch");
    t.row(static_cast<Eigen::Index>(i)) = targets[i].probs.transpose();
  }
  const ForwardPass pass = model.forward(x_hat);
  return backprop(model, pass, soft_cross_entropy(pass.logits, t));
}

// --- trace -----------------------------------------------------------------

TraceWriter::TraceWriter(const std::filesystem::path& path) : out_(path) {
  if (!out_) throw Error("cannot open trace file " + path.string());
}

void TraceWriter::write(const StepRecord& r) {
  nlohmann::json j = {{"step", r.step},
                      {"epoch", r.epoch},
                      {"forget_class", r.forget_class},
                      {"sfda_loss", r.sfda_loss},
                      {"mu_loss", r.mu_loss},
                      {"adv_loss", r.adv_loss},
                      {"delta", r.delta},
                      {"lr", r.learning_rate},
                      {"label_fallback", r.label_fallback}};
  auto audits = nlohmann::json::array();
  for (const auto& a : r.audits)
    audits.push_back({{"delta", a.delta},
                      {"retain_norm", a.retain_norm},
                      {"forget_norm", a.forget_norm},
                      {"required", a.required},
                      {"retain_row_norms", a.retain_row_norms},
                      {"holds", a.holds},
                      {"closed_form_error", a.closed_form_error}});
  j["audits"] = std::move(audits);
  out_ << j.dump() << '\n';
  out_.flush();
}

// --- training loop ---------------------------------------------------------

namespace {

/// Cycles through shuffled target indices, reshuffling after each pass.
class TargetSampler {
 public:
  TargetSampler(const UnlabeledDataset& data, int batch_size, std::mt19937_64& rng)
      : data_(data), batch_(static_cast<std::size_t>(batch_size)), rng_(rng), order_(static_cast<std::size_t>(data.size())) {
    if (data.size() == 0) throw InvalidArgument("target dataset is empty");
    std::iota(order_.begin(), order_.end(), Eigen::Index{0});
    std::shuffle(order_.begin(), order_.end(), rng_);
  }

  TargetBatch next() {
    const std::size_t n = std::min(batch_, order_.size());
    TargetBatch b;
    b.inputs.resize(static_cast<Eigen::Index>(n), data_.dim());
    b.indices.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (cursor_ == order_.size()) {
        std::shuffle(order_.begin(), order_.end(), rng_);
        cursor_ = 0;
      }
      const Eigen::Index idx = order_[cursor_++];
      b.inputs.row(static_cast<Eigen::Index>(i)) = data_.inputs.row(idx);
      b.indices.push_back(idx);
    }
    return b;
  }

 private:
  const UnlabeledDataset& data_;
  std::size_t batch_;
  std::mt19937_64& rng_;
  std::vector<Eigen::Index> order_;
  std::size_t cursor_ = 0;
};

std::vector<RescaledLabel> label_targets(const Matrix& probs, int forget_class, LabelStrategy strategy,
                                         std::mt19937_64& rng, bool& fallback) {
  const auto d = static_cast<int>(probs.cols());
  std::vector<RescaledLabel> out;
  out.reserve(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    switch (strategy) {
      case LabelStrategy::Rescaled:
        try {
          out.push_back(rescale_labels(probs.row(i).transpose(), forget_class));
        } catch (const DegenerateLabelError&) {
          spdlog::warn("rescaled label undefined for class {} (all mass on it); using uniform over retain", forget_class);
          fallback = true;
          out.push_back(uniform_over_retain(d, forget_class));
        }
        break;
      case LabelStrategy::Uniform:
        out.push_back(uniform_over_retain(d, forget_class));
        break;
      case LabelStrategy::Random: {
        std::uniform_int_distribution<int> pick(0, d - 2);
        int c = pick(rng);
        if (c >= forget_class) ++c;
        RescaledLabel l{Vector::Zero(d)};
        l.probs[c] = 1.0;
        out.push_back(std::move(l));
        break;
      }
    }
  }
  return out;
}

/// Every target keeps zero forget mass and sums to one.
void check_label_invariants(const std::vector<RescaledLabel>& targets, int forget_class) {
  for (const RescaledLabel& t : targets)
    if (t.probs[forget_class] != 0.0 || std::abs(t.probs.sum() - 1.0) > 1e-9)
      throw Error("label invariant violated for forget class " + std::to_string(forget_class));
}

[[noreturn]] void abort_non_finite(const StepRecord& r, const char* what) {
  std::ostringstream msg;
  msg << "non-finite " << what << " at step " << r.step << " (epoch " << r.epoch << ", forget class "
      << r.forget_class << "): L_SFDA=" << r.sfda_loss << " L_MU=" << r.mu_loss << " delta=" << r.delta
      << " lr=" << r.learning_rate;
  throw NumericalError(msg.str());
}

void validate_forget_set(const Classifier& model, const std::vector<int>& forget) {
  if (forget.empty()) throw InvalidArgument("forget set is empty");
  std::set<int> unique;
  for (int c : forget) {
    check_class(model, c);
    if (!unique.insert(c).second) throw InvalidArgument("forget class " + std::to_string(c) + " listed twice");
  }
  if (static_cast<int>(unique.size()) >= model.num_classes())
    throw InvalidArgument("forget set covers every class; nothing to retain");
}

}  // namespace

StepRecord combined_step(StepContext& ctx, const TargetBatch& batch, int forget_class, bool audit) {
  Matrix& x_hat = ctx.bank.samples(forget_class);
  StepRecord rec;
  rec.forget_class = forget_class;
  rec.step = ctx.optimizer.steps_taken();
  rec.learning_rate = ctx.optimizer.learning_rate();

  // (a) labels from the current model; constants from here on
  const Matrix probs = ctx.model.predict_proba(x_hat);
  const auto targets = label_targets(probs, forget_class, ctx.cfg.strategy, ctx.rng, rec.label_fallback);
  check_label_invariants(targets, forget_class);
  rec.delta = 1.0 - probs.col(forget_class).mean();
  if (audit) {
    for (Eigen::Index i = 0; i < x_hat.rows(); ++i) {
      try {
        rec.audits.push_back(audit_gradient_flow(ctx.model, x_hat.row(i).transpose(), forget_class));
      } catch (const Error& e) {
        spdlog::debug("gradient-flow audit skipped: {}", e.what());
      }
    }
  }

  // (b) model step on L_SFDA + alpha * L_MU
  const ParamLoss sfda = ctx.sfda.compute(ctx.model, batch);
  const ParamLoss mu = mu_loss(ctx.model, x_hat, targets);
  rec.sfda_loss = sfda.value;
  rec.mu_loss = mu.value;
  if (!std::isfinite(sfda.value) || !std::isfinite(mu.value)) abort_non_finite(rec, "loss");
  const Vector grad = sfda.grad + ctx.cfg.alpha * mu.grad;
  if (!grad.allFinite()) abort_non_finite(rec, "gradient");
  ctx.optimizer.step(ctx.model.parameters(), grad);

  // (c) adversarial step against the updated model
  const AdvLoss adv = adv_loss(ctx.model, x_hat, forget_class);
  rec.adv_loss = adv.value;
  if (!std::isfinite(adv.value)) abort_non_finite(rec, "adversarial loss");
  x_hat -= ctx.cfg.eta_adv * adv.input_grad;
  apply_clamp(x_hat, ctx.cfg);
  ctx.bank.count_step(forget_class);
  return rec;
}

ScadaResult run_scada_ul(const Classifier& source, const UnlabeledDataset& target,
                         const std::vector<int>& forget_classes, SfdaLoss& sfda, const UnlearnConfig& cfg,
                         const RunHooks& hooks) {
  cfg.validate();
  validate_forget_set(source, forget_classes);
  if (target.dim() != source.input_dim()) throw InvalidArgument("target inputs do not match the model");

  ScadaResult result{source, {}, {}};
  for (int c : forget_classes) result.bank.insert(c, init_adversarial_samples(source, c, cfg));
  if (cfg.epochs == 0) return result;

  const auto k = static_cast<int>(forget_classes.size());
  const int per_class = cfg.steps_per_epoch / k;
  if (cfg.steps_per_epoch % k != 0)
    spdlog::info("{} steps per epoch do not divide among {} forget classes; running {} per class",
                 cfg.steps_per_epoch, k, per_class);
  if (per_class == 0) throw ConfigError("fewer steps per epoch than forget classes");

  Sgd optimizer(cfg.sgd);
  std::mt19937_64 rng(derive_seed(cfg.seed, 0x5CADA));
  TargetSampler sampler(target, cfg.batch_size, rng);
  StepContext ctx{result.model, optimizer, result.bank, sfda, cfg, rng};

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    sfda.refresh(result.model, target);
    for (int c : forget_classes) {
      for (int s = 0; s < per_class; ++s) {
        const long step = optimizer.steps_taken();
        const bool audit = hooks.trace != nullptr || (cfg.audit_every > 0 && step % cfg.audit_every == 0);
        StepRecord rec = combined_step(ctx, sampler.next(), c, audit);
        rec.epoch = epoch;
        if (hooks.trace) hooks.trace->write(rec);
        if (hooks.on_step) hooks.on_step(rec);
        result.history.push_back(std::move(rec));
      }
    }
  }
  return result;
}

Classifier run_sfda_only(const Classifier& source, const UnlabeledDataset& target, SfdaLoss& sfda,
                         const UnlearnConfig& cfg) {
  cfg.validate();
  if (target.dim() != source.input_dim()) throw InvalidArgument("target inputs do not match the model");
  Classifier model = source;
  Sgd optimizer(cfg.sgd);
  std::mt19937_64 rng(derive_seed(cfg.seed, 0x5CADA));
  TargetSampler sampler(target, cfg.batch_size, rng);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    sfda.refresh(model, target);
    for (int s = 0; s < cfg.steps_per_epoch; ++s) {
      const ParamLoss loss = sfda.compute(model, sampler.next());
      if (!std::isfinite(loss.value) || !loss.grad.allFinite()) {
        std::ostringstream msg;
        msg << "non-finite SFDA loss at epoch " << epoch << ", step " << s << ": " << loss.value;
        throw NumericalError(msg.str());
      }
      optimizer.step(model.parameters(), loss.grad);
    }
  }
  return model;
}

}  // namespace scada
