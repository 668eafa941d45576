#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "scada/data.hpp"
#include "scada/model.hpp"

namespace scada {

/// Top-1 accuracy in percent. Throws InvalidArgument on an empty set.
double accuracy(const Classifier& model, const DomainDataset& eval);
double accuracy_from_probs(const Matrix& probs, std::span<const int> labels);

/// retain / (100 + forget), both in percent.
double unlearn_score(double retain_acc, double forget_acc);

struct MiaResult {
  double percent = 0.0;         // forget samples labeled "member"
  double attack_accuracy = 0.0;  // held-out accuracy on retain vs OOD
  bool degenerate = false;      // no entropy signal; majority vote used
};

/// Logistic regression on a single feature (softmax entropy): members are
/// retain samples, non-members OOD samples. Half of each group trains the
/// attack, the other half measures attack_accuracy; the attack then labels
/// every forget sample.
MiaResult mia_from_entropies(const Vector& member, const Vector& nonmember, const Vector& forget,
                             std::uint64_t seed);
MiaResult mia_accuracy(const Classifier& model, const DomainDataset& retain_eval,
                       const DomainDataset& ood_eval, const DomainDataset& forget_eval,
                       std::uint64_t seed = 0);

/// A sample counts as forget-classified when its max softmax is below k.
/// fnr[i]: share of forget samples not forget-classified at thresholds[i].
/// fpr[i]: share of retain samples forget-classified at thresholds[i].
struct RateCurves {
  std::vector<double> thresholds;
  std::vector<double> fnr;
  std::vector<double> fpr;
};

RateCurves fnr_fpr_from_confidence(const Vector& forget_conf, const Vector& retain_conf,
                                   std::span<const double> thresholds);
RateCurves fnr_fpr_sweep(const Classifier& model, const DomainDataset& forget_eval,
                         const DomainDataset& retain_eval, std::span<const double> thresholds);

/// n points evenly spaced over [0, 1].
std::vector<double> uniform_thresholds(int n = 101);

/// Equal-width confidence bins over [0, 1]; bin b holds (b/B, (b+1)/B],
/// with confidence 0 in the first bin.
double ece_from_predictions(const Vector& confidence, const std::vector<bool>& correct, int num_bins);
double ece(const Classifier& model, const DomainDataset& eval, int num_bins = 15);

/// Mean cosine similarity over all pairs (row of a, row of b).
double mean_pairwise_cosine(const Matrix& a, const Matrix& b);

struct CosineReport {
  double source_forget = 0.0;
  double source_retain = 0.0;
  double target_forget = 0.0;
  double target_retain = 0.0;
};

/// Feature-space similarity of adversarial samples to real samples, split by
/// domain and by forget/retain membership.
CosineReport adversarial_cosine_report(const Classifier& model, const Matrix& adversarial,
                                       const DomainDataset& source_eval, const DomainDataset& target_eval,
                                       const std::set<int>& forget_classes);

struct MetricsReport {
  std::string method;
  std::uint64_t seed = 0;
  double retain_acc = 0.0;
  double forget_acc = 0.0;
  double unlearn_score = 0.0;
  double mia_pct = 0.0;
  bool mia_degenerate = false;
  RateCurves curves;
  double ece_retain = 0.0;
  double ece_forget = 0.0;
  double wall_time_s = 0.0;
};

struct EvalSets {
  DomainDataset retain;  // held-out target retain samples
  DomainDataset forget;  // target forget samples, evaluation only
  DomainDataset ood;
};

struct MetricOptions {
  int ece_bins = 15;
  std::vector<double> thresholds = uniform_thresholds();
  std::uint64_t mia_seed = 0;
};

MetricsReport evaluate(const Classifier& model, const EvalSets& sets, const MetricOptions& options = {});

std::string to_json(const MetricsReport& report, int indent = 2);
MetricsReport metrics_from_json(const std::string& text);

}  // namespace scada
