#include "scada/losses.hpp"

#include <cmath>

#include "scada/error.hpp"

namespace scada {

ParamLoss backprop(const Classifier& model, const ForwardPass& pass, const LogitLoss& loss) {
  return {loss.value, model.backward(pass, loss.dlogits).params};
}

LogitLoss soft_cross_entropy(const Matrix& logits, const Matrix& targets) {
  if (targets.rows() != logits.rows() || targets.cols() != logits.cols())
    throw InvalidArgument("target shape does not match logits");
  if (logits.rows() == 0) throw InvalidArgument("cross-entropy of an empty batch");
  const double n = static_cast<double>(logits.rows());
  const Matrix logp = log_softmax(logits);
  const Matrix p = logp.array().exp().matrix();
  LogitLoss out;
  out.value = -(targets.array() * logp.array()).sum() / n;
  const Vector mass = targets.rowwise().sum();
  out.dlogits = (p.array().colwise() * mass.array() - targets.array()).matrix() / n;
  return out;
}

LogitLoss cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows())
    throw InvalidArgument("label count does not match batch size");
  Matrix targets = Matrix::Zero(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= logits.cols()) throw InvalidArgument("label " + std::to_string(y) + " out of range");
    targets(i, y) = 1.0;
  }
  return soft_cross_entropy(logits, targets);
}

LogitLoss mean_entropy(const Matrix& logits) {
  if (logits.rows() == 0) throw InvalidArgument("entropy of an empty batch");
  const double n = static_cast<double>(logits.rows());
  const Matrix logp = log_softmax(logits);
  const Matrix p = logp.array().exp().matrix();
  const Vector h = -(p.array() * logp.array()).rowwise().sum();
  LogitLoss out;
  out.value = h.sum() / n;
  out.dlogits = (-(p.array() * (logp.array().colwise() + h.array()))).matrix() / n;
  return out;
}

LogitLoss marginal_entropy(const Matrix& logits) {
  if (logits.rows() == 0) throw InvalidArgument("entropy of an empty batch");
  const double n = static_cast<double>(logits.rows());
  const Matrix p = softmax(logits);
  const Vector mean = p.colwise().mean().transpose();
  Vector g(mean.size());
  double h = 0.0;
  for (Eigen::Index k = 0; k < mean.size(); ++k) {
    if (mean[k] > 0.0) {
      g[k] = -std::log(mean[k]);
      h += mean[k] * g[k];
    } else {
      g[k] = 0.0;  // every p[n][k] is zero, the entry does not contribute
    }
  }
  const Vector pg = p * g;
  LogitLoss out;
  out.value = h;
  out.dlogits = (p.array() * (g.transpose().replicate(p.rows(), 1).array().colwise() - pg.array())).matrix() / n;
  return out;
}

Vector row_entropy(const Matrix& probs) {
  Vector h(probs.rows());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < probs.cols(); ++k) {
      const double p = probs(i, k);
      if (p > 0.0) s -= p * std::log(p);
    }
    h[i] = s;
  }
  return h;
}

Vector smoothed_target(int label, int num_classes, double smoothing) {
  if (num_classes < 2) throw InvalidArgument("need at least 2 classes");
  if (label < 0 || label >= num_classes) throw InvalidArgument("label out of range");
  if (!(smoothing >= 0.0 && smoothing < 1.0)) throw InvalidArgument("smoothing must lie in [0, 1)");
  Vector t = Vector::Constant(num_classes, smoothing / (num_classes - 1));
  t[label] = 1.0 - smoothing;
  return t;
}

std::vector<double> per_class_head_grad_norms(const Classifier& model, const ParamLoss& loss) {
  if (!loss.attached()) throw InvalidArgument("loss has no attached gradient (detached value)");
  if (loss.grad.size() != model.num_parameters())
    throw InvalidArgument("gradient does not belong to this model");
  const auto w = model.head_weights(loss.grad);
  const auto b = model.head_bias(loss.grad);
  std::vector<double> norms(static_cast<std::size_t>(model.num_classes()));
  for (int c = 0; c < model.num_classes(); ++c)
    norms[static_cast<std::size_t>(c)] = std::sqrt(w.row(c).squaredNorm() + b[c] * b[c]);
  return norms;
}

}  // namespace scada
