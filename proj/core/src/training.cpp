#include "scada/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "scada/error.hpp"
#include "scada/losses.hpp"

namespace scada {

Classifier train_source(Classifier model, const DomainDataset& source, const SourceTrainOptions& options) {
  const int d = model.num_classes();
  if (source.empty()) throw InvalidArgument("source dataset is empty");
  if (!(options.smoothing >= 0.0 && options.smoothing < 1.0)) throw InvalidArgument("smoothing must lie in [0, 1)");
  if (options.batch_size < 1 || options.epochs < 0) throw InvalidArgument("invalid batch size or epoch count");
  for (int y : source.labels)
    if (y < 0 || y >= d) throw InvalidArgument("source label " + std::to_string(y) + " outside [0, " + std::to_string(d) + ")");

  Matrix targets(source.size(), d);
  for (Eigen::Index i = 0; i < source.size(); ++i)
    targets.row(i) = smoothed_target(source.labels[static_cast<std::size_t>(i)], d, options.smoothing).transpose();

  Sgd optimizer(options.sgd);
  std::mt19937_64 rng(options.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(source.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  const auto batch = static_cast<std::size_t>(options.batch_size);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const auto n = static_cast<Eigen::Index>(end - start);
      Matrix x(n, source.dim());
      Matrix t(n, d);
      for (Eigen::Index i = 0; i < n; ++i) {
        x.row(i) = source.inputs.row(order[start + static_cast<std::size_t>(i)]);
        t.row(i) = targets.row(order[start + static_cast<std::size_t>(i)]);
      }
      const ForwardPass pass = model.forward(x);
      const ParamLoss loss = backprop(model, pass, soft_cross_entropy(pass.logits, t));
      if (!std::isfinite(loss.value) || !loss.grad.allFinite()) {
        std::ostringstream msg;
        msg << "source training diverged at epoch " << epoch << ", batch " << batches << ": loss " << loss.value
            << ", lr " << optimizer.learning_rate();
        throw NumericalError(msg.str());
      }
      optimizer.step(model.parameters(), loss.grad);
      epoch_loss += loss.value;
      ++batches;
    }
    spdlog::debug("source epoch {}: mean loss {:.5f}", epoch, epoch_loss / static_cast<double>(batches));
  }
  return model;
}

}  // namespace scada
