#include "scada/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>

#include <json.hpp>

#include "scada/error.hpp"
#include "scada/losses.hpp"

namespace scada {

double accuracy_from_probs(const Matrix& probs, std::span<const int> labels) {
  if (probs.rows() == 0) throw InvalidArgument("accuracy of an empty set");
  if (static_cast<std::size_t>(probs.rows()) != labels.size()) throw InvalidArgument("label count mismatch");
  long correct = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index arg = 0;
    probs.row(i).maxCoeff(&arg);
    if (arg == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(probs.rows());
}

double accuracy(const Classifier& model, const DomainDataset& eval) {
  if (eval.size() == 0) throw InvalidArgument("accuracy of an empty set");
  return accuracy_from_probs(model.predict_proba(eval.inputs), eval.labels);
}

double unlearn_score(double retain_acc, double forget_acc) { return retain_acc / (100.0 + forget_acc); }

// --- MIA -------------------------------------------------------------------

namespace {

struct Logistic {
  double w = 0.0;
  double b = 0.0;
  double mean = 0.0;
  double scale = 1.0;

  bool member(double x) const { return w * (x - mean) / scale + b >= 0.0; }
};

/// Newton iterations on the L2-regularized log-likelihood of one standardized feature.
Logistic fit_logistic(const std::vector<double>& x, const std::vector<int>& y) {
  Logistic m;
  const double n = static_cast<double>(x.size());
  m.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double var = 0.0;
  for (double v : x) var += (v - m.mean) * (v - m.mean);
  m.scale = std::sqrt(var / n);
  const double l2 = 1e-4;
  for (int it = 0; it < 100; ++it) {
    double gw = l2 * m.w, gb = 0.0, hww = l2, hwb = 0.0, hbb = 1e-12;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double u = (x[i] - m.mean) / m.scale;
      const double p = 1.0 / (1.0 + std::exp(-(m.w * u + m.b)));
      const double r = p - y[i];
      const double s = p * (1.0 - p);
      gw += r * u / n;
      gb += r / n;
      hww += s * u * u / n;
      hwb += s * u / n;
      hbb += s / n;
    }
    const double det = hww * hbb - hwb * hwb;
    if (!(det > 0.0)) break;
    const double dw = (hbb * gw - hwb * gb) / det;
    const double db = (hww * gb - hwb * gw) / det;
    m.w -= dw;
    m.b -= db;
    if (std::abs(dw) + std::abs(db) < 1e-12) break;
  }
  return m;
}

void halve(const Vector& v, std::mt19937_64& rng, std::vector<double>& train, std::vector<double>& test) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  const std::size_t half = (idx.size() + 1) / 2;
  for (std::size_t i = 0; i < idx.size(); ++i) (i < half ? train : test).push_back(v[idx[i]]);
}

}  // namespace

MiaResult mia_from_entropies(const Vector& member, const Vector& nonmember, const Vector& forget,
                             std::uint64_t seed) {
  if (member.size() == 0 || nonmember.size() == 0 || forget.size() == 0)
    throw InvalidArgument("MIA needs non-empty member, non-member and forget sets");
  std::mt19937_64 rng(seed);
  std::vector<double> mtrain, mtest, ntrain, ntest;
  halve(member, rng, mtrain, mtest);
  halve(nonmember, rng, ntrain, ntest);

  std::vector<double> x(mtrain);
  x.insert(x.end(), ntrain.begin(), ntrain.end());
  std::vector<int> y(mtrain.size(), 1);
  y.resize(x.size(), 0);

  MiaResult out;
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  std::function<bool(double)> predict;
  if (*hi - *lo <= 1e-12 * std::max(1.0, std::abs(*hi))) {
    out.degenerate = true;
    const bool majority_member = mtrain.size() >= ntrain.size();
    predict = [majority_member](double) { return majority_member; };
  } else {
    const Logistic m = fit_logistic(x, y);
    predict = [m](double v) { return m.member(v); };
  }

  long hits = 0;
  for (double v : mtest) hits += predict(v) ? 1 : 0;
  for (double v : ntest) hits += predict(v) ? 0 : 1;
  const auto tested = static_cast<double>(mtest.size() + ntest.size());
  out.attack_accuracy = tested > 0 ? 100.0 * static_cast<double>(hits) / tested : 0.0;

  long members = 0;
  for (Eigen::Index i = 0; i < forget.size(); ++i) members += predict(forget[i]) ? 1 : 0;
  out.percent = 100.0 * static_cast<double>(members) / static_cast<double>(forget.size());
  return out;
}

MiaResult mia_accuracy(const Classifier& model, const DomainDataset& retain_eval, const DomainDataset& ood_eval,
                       const DomainDataset& forget_eval, std::uint64_t seed) {
  return mia_from_entropies(row_entropy(model.predict_proba(retain_eval.inputs)),
                            row_entropy(model.predict_proba(ood_eval.inputs)),
                            row_entropy(model.predict_proba(forget_eval.inputs)), seed);
}

// --- FNR / FPR -------------------------------------------------------------

RateCurves fnr_fpr_from_confidence(const Vector& forget_conf, const Vector& retain_conf,
                                   std::span<const double> thresholds) {
  if (thresholds.empty()) throw InvalidArgument("empty threshold list");
  if (forget_conf.size() == 0 || retain_conf.size() == 0) throw InvalidArgument("empty evaluation set");
  RateCurves c;
  c.thresholds.assign(thresholds.begin(), thresholds.end());
  for (double k : thresholds) {
    if (std::isnan(k)) throw InvalidArgument("NaN threshold");
    const auto kept = (forget_conf.array() >= k).count();
    const auto flagged = (retain_conf.array() < k).count();
    c.fnr.push_back(static_cast<double>(kept) / static_cast<double>(forget_conf.size()));
    c.fpr.push_back(static_cast<double>(flagged) / static_cast<double>(retain_conf.size()));
  }
  return c;
}

RateCurves fnr_fpr_sweep(const Classifier& model, const DomainDataset& forget_eval,
                         const DomainDataset& retain_eval, std::span<const double> thresholds) {
  const Vector f = model.predict_proba(forget_eval.inputs).rowwise().maxCoeff();
  const Vector r = model.predict_proba(retain_eval.inputs).rowwise().maxCoeff();
  return fnr_fpr_from_confidence(f, r, thresholds);
}

std::vector<double> uniform_thresholds(int n) {
  if (n < 2) throw InvalidArgument("need at least two thresholds");
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) t[static_cast<std::size_t>(i)] = static_cast<double>(i) / (n - 1);
  return t;
}

// --- ECE -------------------------------------------------------------------

double ece_from_predictions(const Vector& confidence, const std::vector<bool>& correct, int num_bins) {
  if (num_bins < 1) throw InvalidArgument("num_bins must be >= 1");
  if (confidence.size() == 0) throw InvalidArgument("ECE of an empty set");
  if (static_cast<std::size_t>(confidence.size()) != correct.size()) throw InvalidArgument("size mismatch");
  std::vector<double> conf_sum(static_cast<std::size_t>(num_bins), 0.0);
  std::vector<double> acc_sum(static_cast<std::size_t>(num_bins), 0.0);
  for (Eigen::Index i = 0; i < confidence.size(); ++i) {
    const double c = confidence[i];
    auto b = static_cast<int>(std::ceil(c * num_bins)) - 1;
    b = std::clamp(b, 0, num_bins - 1);
    conf_sum[static_cast<std::size_t>(b)] += c;
    acc_sum[static_cast<std::size_t>(b)] += correct[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
  }
  double total = 0.0;
  for (int b = 0; b < num_bins; ++b)
    total += std::abs(acc_sum[static_cast<std::size_t>(b)] - conf_sum[static_cast<std::size_t>(b)]);
  return total / static_cast<double>(confidence.size());
}

double ece(const Classifier& model, const DomainDataset& eval, int num_bins) {
  if (eval.size() == 0) throw InvalidArgument("ECE of an empty set");
  const Matrix p = model.predict_proba(eval.inputs);
  Vector conf(p.rows());
  std::vector<bool> correct(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index arg = 0;
    conf[i] = p.row(i).maxCoeff(&arg);
    correct[static_cast<std::size_t>(i)] = arg == eval.labels[static_cast<std::size_t>(i)];
  }
  return ece_from_predictions(conf, correct, num_bins);
}

// --- cosine ----------------------------------------------------------------

double mean_pairwise_cosine(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw InvalidArgument("feature width mismatch");
  if (a.rows() == 0 || b.rows() == 0) return std::numeric_limits<double>::quiet_NaN();
  // mean_ij <a_i/|a_i|, b_j/|b_j|> = <mean_i a_i/|a_i|, mean_j b_j/|b_j|>
  auto mean_unit = [](const Matrix& m) {
    Vector s = Vector::Zero(m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double n = m.row(i).norm();
      if (n > 0.0) s += m.row(i).transpose() / n;
    }
    return Vector(s / static_cast<double>(m.rows()));
  };
  return mean_unit(a).dot(mean_unit(b));
}

CosineReport adversarial_cosine_report(const Classifier& model, const Matrix& adversarial,
                                       const DomainDataset& source_eval, const DomainDataset& target_eval,
                                       const std::set<int>& forget_classes) {
  if (adversarial.rows() == 0) throw InvalidArgument("adversarial bank is empty");
  const Matrix adv = model.features(adversarial);
  auto split = [&](const DomainDataset& ds, double& forget, double& retain) {
    std::set<int> keep;
    for (int c : ds.class_set())
      if (forget_classes.count(c) == 0) keep.insert(c);
    const DomainDataset f = ds.filter(forget_classes);
    const DomainDataset r = ds.filter(keep);
    forget = f.size() ? mean_pairwise_cosine(adv, model.features(f.inputs)) : std::numeric_limits<double>::quiet_NaN();
    retain = r.size() ? mean_pairwise_cosine(adv, model.features(r.inputs)) : std::numeric_limits<double>::quiet_NaN();
  };
  CosineReport out;
  split(source_eval, out.source_forget, out.source_retain);
  split(target_eval, out.target_forget, out.target_retain);
  return out;
}

// --- report ----------------------------------------------------------------

MetricsReport evaluate(const Classifier& model, const EvalSets& sets, const MetricOptions& options) {
  MetricsReport r;
  r.retain_acc = accuracy(model, sets.retain);
  r.forget_acc = accuracy(model, sets.forget);
  r.unlearn_score = unlearn_score(r.retain_acc, r.forget_acc);
  const MiaResult mia = mia_accuracy(model, sets.retain, sets.ood, sets.forget, options.mia_seed);
  r.mia_pct = mia.percent;
  r.mia_degenerate = mia.degenerate;
  r.curves = fnr_fpr_sweep(model, sets.forget, sets.retain, options.thresholds);
  r.ece_retain = ece(model, sets.retain, options.ece_bins);
  r.ece_forget = ece(model, sets.forget, options.ece_bins);
  return r;
}

std::string to_json(const MetricsReport& r, int indent) {
  const nlohmann::json j = {{"method", r.method},
                            {"seed", r.seed},
                            {"retain_acc", r.retain_acc},
                            {"forget_acc", r.forget_acc},
                            {"unlearn_score", r.unlearn_score},
                            {"mia_pct", r.mia_pct},
                            {"mia_degenerate", r.mia_degenerate},
                            {"thresholds", r.curves.thresholds},
                            {"fnr", r.curves.fnr},
                            {"fpr", r.curves.fpr},
                            {"ece_retain", r.ece_retain},
                            {"ece_forget", r.ece_forget},
                            {"wall_time_s", r.wall_time_s}};
  return j.dump(indent);
}

MetricsReport metrics_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    MetricsReport r;
    r.method = j.at("method").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.retain_acc = j.at("retain_acc").get<double>();
    r.forget_acc = j.at("forget_acc").get<double>();
    r.unlearn_score = j.at("unlearn_score").get<double>();
    r.mia_pct = j.at("mia_pct").get<double>();
    r.mia_degenerate = j.value("mia_degenerate", false);
    r.curves.thresholds = j.at("thresholds").get<std::vector<double>>();
    r.curves.fnr = j.at("fnr").get<std::vector<double>>();
    r.curves.fpr = j.at("fpr").get<std::vector<double>>();
    r.ece_retain = j.at("ece_retain").get<double>();
    r.ece_forget = j.at("ece_forget").get<double>();
    r.wall_time_s = j.at("wall_time_s").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed metrics report: ") + e.what());
  }
}

}  // namespace scada
