#include "scada/optim.hpp"

#include <cmath>

#include "scada/error.hpp"

namespace scada {

Sgd::Sgd(SgdOptions options) : options_(options) {
  if (!(options_.lr > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (options_.momentum < 0.0 || options_.weight_decay < 0.0)
    throw InvalidArgument("momentum and weight decay must be non-negative");
}

double Sgd::learning_rate() const {
  return options_.lr * std::pow(1.0 + options_.schedule_gamma * static_cast<double>(steps_), -options_.schedule_power);
}

void Sgd::step(Vector& params, const Vector& grad) {
  if (grad.size() != params.size()) throw InvalidArgument("gradient size does not match parameters");
  Vector d = grad;
  if (options_.weight_decay != 0.0) d += options_.weight_decay * params;
  if (options_.momentum != 0.0) {
    if (velocity_.size() == 0)
      velocity_ = d;
    else
      velocity_ = options_.momentum * velocity_ + d;
    if (options_.nesterov)
      d += options_.momentum * velocity_;
    else
      d = velocity_;
  }
  params -= learning_rate() * d;
  ++steps_;
}

}  // namespace scada
