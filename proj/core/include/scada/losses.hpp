#pragma once

#include <span>
#include <vector>

#include "scada/model.hpp"

namespace scada {

/// A scalar loss expressed as a function of a batch of logits, with its
/// gradient dL/dlogits. All batch losses here are means over rows.
struct LogitLoss {
  double value = 0.0;
  Matrix dlogits;
};

/// A scalar loss together with its gradient with respect to every model
/// parameter. A default-constructed ParamLoss carries a value only and is
/// "detached": there is no gradient to inspect.
struct ParamLoss {
  double value = 0.0;
  Vector grad;

  bool attached() const { return grad.size() > 0; }
};

/// Pushes a logit-level loss back through the model that produced `pass`.
ParamLoss backprop(const Classifier& model, const ForwardPass& pass, const LogitLoss& loss);

/// Mean cross-entropy -sum_i t_i log p_i against soft targets (rows of
/// `targets` need not sum to one).
LogitLoss soft_cross_entropy(const Matrix& logits, const Matrix& targets);

/// Mean cross-entropy against integer labels.
LogitLoss cross_entropy(const Matrix& logits, std::span<const int> labels);

/// Mean per-sample softmax entropy.
LogitLoss mean_entropy(const Matrix& logits);

/// Entropy of the batch-mean softmax vector (prediction diversity).
LogitLoss marginal_entropy(const Matrix& logits);

/// Per-row entropy of probability vectors.
Vector row_entropy(const Matrix& probs);

/// Label-smoothed target: 1 - s on the label, s / (d - 1) everywhere else.
Vector smoothed_target(int label, int num_classes, double smoothing);

/// || dL/dtau_c ||_2 for every class c, bias included with its row.
/// Throws InvalidArgument when `loss` has no attached gradient.
std::vector<double> per_class_head_grad_norms(const Classifier& model, const ParamLoss& loss);

}  // namespace scada
