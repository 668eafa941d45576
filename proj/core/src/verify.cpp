#include "scada/verify.hpp"

#include <cmath>

#include "scada/error.hpp"
#include "scada/losses.hpp"
#include "scada/unlearn.hpp"

namespace scada {

Matrix closed_form_head_gradient(const Vector& features, const Vector& probs, const Vector& target, int forget_class) {
  const auto d = probs.size();
  const auto h = features.size();
  Matrix g(d, h + 1);
  for (Eigen::Index c = 0; c < d; ++c) {
    const double coeff = probs[c] - (c != forget_class ? target[c] : 0.0);
    g.row(c).head(h) = coeff * features.transpose();
    g(c, h) = coeff;
  }
  return g;
}

GradientFlowAudit audit_gradient_flow(const Classifier& model, const Vector& x_hat, int forget_class) {
  if (forget_class < 0 || forget_class >= model.num_classes()) throw InvalidArgument("forget class out of range");
  const ForwardPass pass = model.forward(x_hat.transpose());
  const Vector y = pass.probs.row(0).transpose();

  GradientFlowAudit audit;
  for (Eigen::Index c = 0; c < y.size(); ++c)
    if (c != forget_class) audit.delta += y[c];
  if (audit.delta >= 1.0 || y[forget_class] == 0.0)
    throw InvalidArgument("forget class has no probability mass (delta = 1); the inequality is vacuous");

  const RescaledLabel target = rescale_labels(y, forget_class);
  const ParamLoss loss = backprop(model, pass, soft_cross_entropy(pass.logits, target.probs.transpose()));
  const std::vector<double> norms = per_class_head_grad_norms(model, loss);

  double retain_sq = 0.0;
  for (int c = 0; c < model.num_classes(); ++c) {
    if (c == forget_class) continue;
    audit.retain_row_norms.push_back(norms[static_cast<std::size_t>(c)]);
    retain_sq += norms[static_cast<std::size_t>(c)] * norms[static_cast<std::size_t>(c)];
  }
  audit.retain_norm = std::sqrt(retain_sq);
  audit.forget_norm = norms[static_cast<std::size_t>(forget_class)];
  audit.required = (1.0 / audit.delta - 1.0) * audit.forget_norm;
  audit.holds = audit.retain_norm >= audit.required - kGradientFlowSlack;

  const Matrix expected = closed_form_head_gradient(pass.features().row(0).transpose(), y, target.probs, forget_class);
  const auto h = model.feature_dim();
  Matrix analytic(model.num_classes(), h + 1);
  analytic.leftCols(h) = model.head_weights(loss.grad);
  analytic.col(h) = model.head_bias(loss.grad);
  audit.closed_form_error = (analytic - expected).cwiseAbs().maxCoeff();
  return audit;
}

}  // namespace scada
