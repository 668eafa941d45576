#pragma once

#include <vector>

#include "scada/model.hpp"

namespace scada {

/// Gradient-flow audit for one adversarial sample.
struct GradientFlowAudit {
  double delta = 0.0;         // softmax mass on the non-forget classes
  double retain_norm = 0.0;   // norm over all non-forget head rows together
  double forget_norm = 0.0;   // norm of the forget row
  double required = 0.0;      // (1/delta - 1) * forget_norm
  std::vector<double> retain_row_norms;
  bool holds = false;         // retain_norm >= required - slack
  double closed_form_error = 0.0;  // max |analytic - closed form| over head entries
};

inline constexpr double kGradientFlowSlack = 1e-6;

/// Labels x_hat with the rescaled target, evaluates the unlearning loss and
/// compares the head-gradient norms of the non-forget rows against the forget
/// row scaled by (1/delta - 1). Throws InvalidArgument when delta == 1.
GradientFlowAudit audit_gradient_flow(const Classifier& model, const Vector& x_hat, int forget_class);

/// Closed-form d L / d tau_c = [phi; 1] (y_c - [c != forget] * y_hat_c), one
/// row per class, bias entry last.
Matrix closed_form_head_gradient(const Vector& features, const Vector& probs, const Vector& target,
                                 int forget_class);

}  // namespace scada
