#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scada/model.hpp"

namespace scada {

enum class Domain { Source, Target };

std::string to_string(Domain d);

/// Inputs without labels. This is the only view of target data that the
/// adaptation and unlearning code receives.
struct UnlabeledDataset {
  Matrix inputs;
  Domain domain = Domain::Target;

  Eigen::Index size() const { return inputs.rows(); }
  int dim() const { return static_cast<int>(inputs.cols()); }
  UnlabeledDataset subset(std::span<const Eigen::Index> rows) const;
};

/// Labeled samples of one domain. For the target domain the labels exist for
/// evaluation only; training code takes an adaptation_view().
struct DomainDataset {
  Matrix inputs;
  std::vector<int> labels;
  Domain domain = Domain::Source;

  Eigen::Index size() const { return inputs.rows(); }
  int dim() const { return static_cast<int>(inputs.cols()); }
  bool empty() const { return inputs.rows() == 0; }

  /// Distinct labels actually present.
  std::set<int> class_set() const;

  UnlabeledDataset adaptation_view() const { return {inputs, domain}; }
  DomainDataset subset(std::span<const Eigen::Index> rows) const;
  /// Samples whose label is in `classes`.
  DomainDataset filter(const std::set<int>& classes) const;
};

/// x -> A x + b, applied to the clean target cluster samples.
struct AffineShift {
  Matrix linear;
  Vector offset;

  static AffineShift identity(int dim);
  /// Rotates every consecutive coordinate pair (0,1), (2,3), ... by `degrees`
  /// and translates every coordinate by `translation`.
  static AffineShift rotation(int dim, double degrees, double translation);

  /// Throws InvalidArgument for a non-square, mismatched or singular map.
  void validate(int dim) const;
};

struct SyntheticSpec {
  int num_classes = 6;
  int dim = 2;
  int samples_per_class = 100;
  double cluster_std = 1.0;
  /// Class centers are drawn from N(0, center_spread^2 I) and rejected until
  /// every pair is at least min_center_distance * cluster_std apart.
  double center_spread = 4.0;
  double min_center_distance = 4.0;
  /// Standard deviation of the isotropic noise added after the shift.
  double target_noise = 0.0;
  AffineShift shift;  // empty means identity
};

struct SyntheticDomains {
  DomainDataset source;
  DomainDataset target;
  Matrix source_centers;  // num_classes x dim
  Matrix target_centers;  // centers pushed through the shift
  double cluster_std = 1.0;
};

/// Gaussian class clusters in the source domain and the same clusters pushed
/// through an affine shift (plus noise) in the target domain. Pure function
/// of its arguments.
SyntheticDomains make_synthetic_domains(const SyntheticSpec& spec, std::uint64_t seed);

struct SplitSpec {
  std::set<int> forget_classes;
  double train_fraction = 0.8;
};

/// Partitions by class membership: samples of a forget class go to `forget`,
/// everything else to `retain`. Throws when every present class would be
/// forgotten or a forget class is absent from a source dataset.
std::pair<DomainDataset, DomainDataset> split_retain_forget(const DomainDataset& ds, const SplitSpec& spec);

/// Stratified split: each class contributes round(fraction * n_c) samples to
/// train (clamped so both sides are non-empty). Throws for a class with fewer
/// than two samples or fraction outside (0, 1).
std::pair<DomainDataset, DomainDataset> train_test_split(const DomainDataset& ds, double fraction,
                                                         std::uint64_t seed);

struct OodSpec {
  int num_classes = 0;
  int samples_per_class = 50;
  double cluster_std = 1.0;
  double center_spread = 4.0;
  /// Minimum distance from every reference center, in units of cluster_std.
  double min_distance = 5.0;
  /// In-distribution centers to stay away from (rows).
  Matrix reference_centers;
};

/// Label used for out-of-distribution class k. Always negative, so it can
/// never collide with a class of the label space.
constexpr int ood_label(int k) { return -1 - k; }

/// Gaussian clusters whose centers keep at least min_distance * cluster_std
/// from every reference center.
DomainDataset sample_ood_classes(const OodSpec& spec, std::uint64_t seed);

/// Indices 0..n-1 drawn uniformly without replacement, sorted.
std::vector<Eigen::Index> sample_indices(Eigen::Index n, Eigen::Index count, std::uint64_t seed);

/// CSV with header feature_0..feature_{dim-1},label,domain.
void write_csv(const DomainDataset& ds, const std::filesystem::path& path);
DomainDataset read_csv(const std::filesystem::path& path);

}  // namespace scada
