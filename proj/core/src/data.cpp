#include "scada/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "scada/error.hpp"

namespace scada {

std::string to_string(Domain d) { return d == Domain::Source ? "source" : "target"; }

namespace {

Domain domain_from_string(const std::string& s) {
  if (s == "source") return Domain::Source;
  if (s == "target") return Domain::Target;
  throw InvalidArgument("unknown domain '" + s + "'");
}

Matrix gather_rows(const Matrix& m, std::span<const Eigen::Index> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= m.rows()) throw InvalidArgument("row index out of range");
    out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  }
  return out;
}

/// Centers from N(0, spread^2 I), redrawn until every center keeps `min_dist`
/// from the ones already placed and from `avoid`.
Matrix draw_centers(int count, int dim, double spread, double min_dist, const Matrix& avoid, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, spread);
  Matrix centers(count, dim);
  constexpr int kMaxAttempts = 100000;
  for (int c = 0; c < count; ++c) {
    int attempts = 0;
    while (true) {
      Vector cand(dim);
      for (int j = 0; j < dim; ++j) cand[j] = normal(rng);
      bool ok = true;
      for (int k = 0; k < c && ok; ++k) ok = (centers.row(k).transpose() - cand).norm() >= min_dist;
      for (Eigen::Index k = 0; k < avoid.rows() && ok; ++k) ok = (avoid.row(k).transpose() - cand).norm() >= min_dist;
      if (ok) {
        centers.row(c) = cand.transpose();
        break;
      }
      if (++attempts > kMaxAttempts)
        throw InvalidArgument("could not place class centers; increase center_spread or reduce the separation");
    }
  }
  return centers;
}

DomainDataset sample_clusters(const Matrix& centers, int per_class, double stddev, bool ood,
                              std::mt19937_64& rng) {
  const auto k = static_cast<int>(centers.rows());
  const auto dim = centers.cols();
  DomainDataset ds;
  ds.inputs.resize(Eigen::Index{k} * per_class, dim);
  ds.labels.reserve(static_cast<std::size_t>(k * per_class));
  std::normal_distribution<double> normal(0.0, stddev);
  Eigen::Index row = 0;
  for (int c = 0; c < k; ++c) {
    for (int s = 0; s < per_class; ++s, ++row) {
      for (Eigen::Index j = 0; j < dim; ++j) ds.inputs(row, j) = centers(c, j) + normal(rng);
      ds.labels.push_back(ood ? ood_label(c) : c);
    }
  }
  return ds;
}

}  // namespace

UnlabeledDataset UnlabeledDataset::subset(std::span<const Eigen::Index> rows) const {
  return {gather_rows(inputs, rows), domain};
}

std::set<int> DomainDataset::class_set() const { return {labels.begin(), labels.end()}; }

DomainDataset DomainDataset::subset(std::span<const Eigen::Index> rows) const {
  DomainDataset out;
  out.inputs = gather_rows(inputs, rows);
  out.domain = domain;
  out.labels.reserve(rows.size());
  for (auto r : rows) out.labels.push_back(labels[static_cast<std::size_t>(r)]);
  return out;
}

DomainDataset DomainDataset::filter(const std::set<int>& classes) const {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (classes.count(labels[i])) rows.push_back(static_cast<Eigen::Index>(i));
  return subset(rows);
}

AffineShift AffineShift::identity(int dim) { return {Matrix::Identity(dim, dim), Vector::Zero(dim)}; }

AffineShift AffineShift::rotation(int dim, double degrees, double translation) {
  AffineShift s = identity(dim);
  const double t = degrees * std::numbers::pi / 180.0;
  for (int i = 0; i + 1 < dim; i += 2) {
    s.linear(i, i) = std::cos(t);
    s.linear(i, i + 1) = -std::sin(t);
    s.linear(i + 1, i) = std::sin(t);
    s.linear(i + 1, i + 1) = std::cos(t);
  }
  s.offset.setConstant(translation);
  return s;
}

void AffineShift::validate(int dim) const {
  if (linear.rows() != dim || linear.cols() != dim || offset.size() != dim)
    throw InvalidArgument("shift dimensions do not match the data dimension");
  Eigen::FullPivLU<Matrix> lu(linear);
  if (lu.rank() < dim) throw InvalidArgument("shift is singular");
}

SyntheticDomains make_synthetic_domains(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.num_classes < 4) throw InvalidArgument("synthetic domains need at least 4 classes");
  if (spec.dim < 1 || spec.samples_per_class < 1) throw InvalidArgument("dim and samples_per_class must be positive");
  if (!(spec.cluster_std > 0.0) || spec.target_noise < 0.0) throw InvalidArgument("invalid noise levels");
  const AffineShift shift = spec.shift.linear.size() == 0 ? AffineShift::identity(spec.dim) : spec.shift;
  shift.validate(spec.dim);

  std::mt19937_64 rng(seed);
  SyntheticDomains out;
  out.cluster_std = spec.cluster_std;
  out.source_centers = draw_centers(spec.num_classes, spec.dim, spec.center_spread,
                                    spec.min_center_distance * spec.cluster_std, Matrix(0, spec.dim), rng);
  out.source = sample_clusters(out.source_centers, spec.samples_per_class, spec.cluster_std, false, rng);
  out.source.domain = Domain::Source;

  DomainDataset clean = sample_clusters(out.source_centers, spec.samples_per_class, spec.cluster_std, false, rng);
  out.target.domain = Domain::Target;
  out.target.labels = std::move(clean.labels);
  out.target.inputs = (clean.inputs * shift.linear.transpose()).rowwise() + shift.offset.transpose();
  if (spec.target_noise > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.target_noise);
    for (Eigen::Index i = 0; i < out.target.inputs.size(); ++i) out.target.inputs.data()[i] += noise(rng);
  }
  out.target_centers = (out.source_centers * shift.linear.transpose()).rowwise() + shift.offset.transpose();
  return out;
}

std::pair<DomainDataset, DomainDataset> split_retain_forget(const DomainDataset& ds, const SplitSpec& spec) {
  const auto present = ds.class_set();
  if (ds.domain == Domain::Source) {
    for (int c : spec.forget_classes)
      if (!present.count(c)) throw InvalidArgument("forget class " + std::to_string(c) + " absent from source data");
  }
  bool any_retained = false;
  for (int c : present) any_retained = any_retained || !spec.forget_classes.count(c);
  if (!present.empty() && !any_retained) throw InvalidArgument("every class is forgotten; nothing to retain");

  std::vector<Eigen::Index> retain;
  std::vector<Eigen::Index> forget;
  for (std::size_t i = 0; i < ds.labels.size(); ++i)
    (spec.forget_classes.count(ds.labels[i]) ? forget : retain).push_back(static_cast<Eigen::Index>(i));
  return {ds.subset(retain), ds.subset(forget)};
}

std::pair<DomainDataset, DomainDataset> train_test_split(const DomainDataset& ds, double fraction,
                                                         std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidArgument("split fraction must lie in (0, 1)");
  std::map<int, std::vector<Eigen::Index>> by_class;
  for (std::size_t i = 0; i < ds.labels.size(); ++i) by_class[ds.labels[i]].push_back(static_cast<Eigen::Index>(i));

  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> test;
  for (auto& [label, rows] : by_class) {
    const auto n = static_cast<long>(rows.size());
    if (n < 2) throw InvalidArgument("class " + std::to_string(label) + " has fewer than 2 samples");
    std::shuffle(rows.begin(), rows.end(), rng);
    const long k = std::clamp(std::lround(fraction * static_cast<double>(n)), 1L, n - 1);
    train.insert(train.end(), rows.begin(), rows.begin() + k);
    test.insert(test.end(), rows.begin() + k, rows.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {ds.subset(train), ds.subset(test)};
}

DomainDataset sample_ood_classes(const OodSpec& spec, std::uint64_t seed) {
  const int dim = static_cast<int>(spec.reference_centers.cols());
  DomainDataset out;
  out.domain = Domain::Target;
  out.inputs.resize(0, dim);
  if (spec.num_classes <= 0) return out;
  if (dim < 1) throw InvalidArgument("OOD sampling needs reference centers to fix the dimension");
  std::mt19937_64 rng(seed);
  // OOD centers only avoid the references; they may sit close to each other.
  Matrix centers(spec.num_classes, dim);
  for (int k = 0; k < spec.num_classes; ++k)
    centers.row(k) = draw_centers(1, dim, spec.center_spread, spec.min_distance * spec.cluster_std,
                                  spec.reference_centers, rng);
  out = sample_clusters(centers, spec.samples_per_class, spec.cluster_std, true, rng);
  out.domain = Domain::Target;
  return out;
}

std::vector<Eigen::Index> sample_indices(Eigen::Index n, Eigen::Index count, std::uint64_t seed) {
  if (count < 0 || count > n) throw InvalidArgument("cannot draw that many indices");
  std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(static_cast<std::size_t>(count));
  std::sort(all.begin(), all.end());
  return all;
}

void write_csv(const DomainDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (int j = 0; j < ds.dim(); ++j) out << "feature_" << j << ',';
  out << "label,domain\n";
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    for (int j = 0; j < ds.dim(); ++j) out << ds.inputs(i, j) << ',';
    out << ds.labels[static_cast<std::size_t>(i)] << ',' << to_string(ds.domain) << '\n';
  }
}

DomainDataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("CSV is missing its header row");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 3 || header[header.size() - 2] != "label" || header.back() != "domain")
    throw InvalidArgument("CSV header must end with label,domain");
  const int dim = static_cast<int>(header.size()) - 2;
  for (int j = 0; j < dim; ++j)
    if (header[static_cast<std::size_t>(j)] != "feature_" + std::to_string(j))
      throw InvalidArgument("unexpected CSV column '" + header[static_cast<std::size_t>(j)] + "'");

  std::vector<double> values;
  DomainDataset ds;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    for (int j = 0; j < dim; ++j) {
      if (!std::getline(ss, cell, ',')) throw InvalidArgument("short CSV row");
      values.push_back(std::stod(cell));
    }
    if (!std::getline(ss, cell, ',')) throw InvalidArgument("CSV row without label");
    ds.labels.push_back(std::stoi(cell));
    if (!std::getline(ss, cell, ',')) throw InvalidArgument("CSV row without domain");
    const Domain d = domain_from_string(cell);
    if (first) ds.domain = d;
    else if (d != ds.domain) throw InvalidArgument("CSV mixes domains");
    first = false;
  }
  ds.inputs = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(ds.labels.size()), dim);
  return ds;
}

}  // namespace scada
