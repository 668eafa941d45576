#pragma once

#include <cstdint>

#include "scada/data.hpp"
#include "scada/model.hpp"
#include "scada/optim.hpp"

namespace scada {

struct SourceTrainOptions {
  int epochs = 10;
  int batch_size = 32;
  double smoothing = 0.1;
  SgdOptions sgd;
  std::uint64_t seed = 0;
};

/// Supervised training on labeled source data with label smoothing.
/// Throws InvalidArgument for labels outside [0, d) or smoothing outside
/// [0, 1), and NumericalError if the loss stops being finite.
Classifier train_source(Classifier model, const DomainDataset& source, const SourceTrainOptions& options);

}  // namespace scada
