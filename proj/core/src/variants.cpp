#include "scada/variants.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include <spdlog/spdlog.h>

#include "scada/error.hpp"

namespace scada {

GammaVector estimate_gamma(const Classifier& model, const UnlabeledDataset& target) {
  if (target.size() == 0) throw InvalidArgument("cannot estimate gamma on an empty dataset");
  const Matrix p = model.predict_proba(target.inputs);
  GammaVector g{Vector::Zero(p.cols()), p.rows()};
  std::vector<double> col(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    for (Eigen::Index i = 0; i < p.rows(); ++i) col[static_cast<std::size_t>(i)] = p(i, c);
    std::sort(col.begin(), col.end());
    g.accumulation[c] = std::accumulate(col.begin(), col.end(), 0.0);
  }
  return g;
}

std::vector<int> predict_forget_classes(const GammaVector& gamma, int num_forget, int ratio) {
  const auto d = static_cast<long>(gamma.accumulation.size());
  const long k = static_cast<long>(num_forget) * ratio;
  if (num_forget < 1 || ratio < 1 || k >= d)
    throw InvalidArgument("need 0 < R * num_forget < number of classes, got " + std::to_string(k) + " of " +
                          std::to_string(d));
  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return gamma.accumulation[a] < gamma.accumulation[b]; });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

UnknownClassResult run_uc_scada(const Classifier& source, const UnlabeledDataset& target, int num_forget,
                                SfdaLoss& sfda, const UnlearnConfig& cfg, int ratio, const RunHooks& hooks) {
  UnknownClassResult out{estimate_gamma(source, target), {}, {source, {}, {}}};
  out.predicted = predict_forget_classes(out.gamma, num_forget, ratio);
  std::string listed;
  for (int c : out.predicted) listed += (listed.empty() ? "" : ", ") + std::to_string(c);
  spdlog::info("predicted forget classes: [{}]", listed);
  out.run = run_scada_ul(source, target, out.predicted, sfda, cfg, hooks);
  return out;
}

void ForgetRequestSequence::validate(int num_classes) const {
  if (requests.empty()) throw InvalidArgument("no unlearning requests");
  if (!(subset_fraction > 0.0 && subset_fraction <= 1.0)) throw InvalidArgument("subset_fraction must lie in (0, 1]");
  std::set<int> seen;
  for (const auto& r : requests) {
    if (r.empty()) throw InvalidArgument("empty unlearning request");
    for (int c : r) {
      if (c < 0 || c >= num_classes) throw InvalidArgument("request class " + std::to_string(c) + " out of range");
      if (!seen.insert(c).second) throw InvalidArgument("class " + std::to_string(c) + " requested twice");
    }
  }
  if (static_cast<int>(seen.size()) >= num_classes) throw InvalidArgument("requests cover every class");
}

ContinualResult run_c_scada(const Classifier& source, const UnlabeledDataset& target,
                            const ForgetRequestSequence& sequence, SfdaLoss& sfda, const UnlearnConfig& cfg,
                            const RunHooks& hooks) {
  sequence.validate(source.num_classes());
  ContinualResult out;
  for (std::size_t i = 0; i < sequence.requests.size(); ++i) {
    UnlearnConfig stage_cfg = cfg;
    stage_cfg.seed = derive_seed(cfg.seed, 0xC0 + i);
    if (i == 0) {
      out.stages.push_back(run_scada_ul(source, target, sequence.requests[i], sfda, stage_cfg, hooks));
      continue;
    }
    stage_cfg.epochs = sequence.later_epochs >= 0 ? sequence.later_epochs : std::max(1, cfg.epochs / 2);
    const auto n = static_cast<Eigen::Index>(target.size());
    const auto count = std::clamp<Eigen::Index>(
        static_cast<Eigen::Index>(std::llround(sequence.subset_fraction * static_cast<double>(n))), 1, n);
    const auto rows = sample_indices(n, count, stage_cfg.seed);
    const UnlabeledDataset sub = target.subset(rows);
    spdlog::info("request {}: {} of {} target samples, {} epochs", i + 1, count, n, stage_cfg.epochs);
    const Classifier previous = out.stages.back().model;
    out.stages.push_back(run_scada_ul(previous, sub, sequence.requests[i], sfda, stage_cfg, hooks));
  }
  return out;
}

}  // namespace scada
