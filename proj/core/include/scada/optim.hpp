#pragma once

#include "scada/model.hpp"

namespace scada {

struct SgdOptions {
  double lr = 1e-2;
  double momentum = 0.9;
  double weight_decay = 1e-3;
  bool nesterov = true;
  // lr(t) = lr * (1 + gamma * t)^(-power)
  double schedule_gamma = 1e-3;
  double schedule_power = 0.9;
};

/// SGD with (Nesterov) momentum, coupled weight decay and the inverse-power
/// learning-rate schedule. The schedule advances once per step().
class Sgd {
 public:
  explicit Sgd(SgdOptions options = {});

  void step(Vector& params, const Vector& grad);

  double learning_rate() const;
  long steps_taken() const { return steps_; }
  const SgdOptions& options() const { return options_; }

 private:
  SgdOptions options_;
  Vector velocity_;
  long steps_ = 0;
};

}  // namespace scada
