#include "scada/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "scada/error.hpp"
#include "scada/plot.hpp"

namespace scada {

using nlohmann::json;

std::string to_string(Method m) {
  switch (m) {
    case Method::Original:
      return "original";
    case Method::Retrain:
      return "retrain";
    case Method::Finetune:
      return "finetune";
    case Method::Scada:
      return "scada";
    case Method::UcScada:
      return "uc_scada";
    case Method::CScada:
      return "c_scada";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  for (Method m : {Method::Original, Method::Retrain, Method::Finetune, Method::Scada, Method::UcScada, Method::CScada})
    if (to_string(m) == name) return m;
  throw ConfigError("invalid method '" + name + "'");
}

// --- config parsing --------------------------------------------------------

namespace {

/// Reads fields of one JSON object and rejects keys nobody asked for.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + " must be an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where_ + "." + key + " has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [k, _] : j_.items())
      if (!seen_.count(k)) throw ConfigError("unknown field " + where_ + "." + k);
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void read_sgd(Fields& f, SgdOptions& s) {
  f.read("lr", s.lr);
  f.read("momentum", s.momentum);
  f.read("weight_decay", s.weight_decay);
  f.read("nesterov", s.nesterov);
  f.read("schedule_gamma", s.schedule_gamma);
  f.read("schedule_power", s.schedule_power);
}

json sgd_json(const SgdOptions& s) {
  return {{"lr", s.lr},
          {"momentum", s.momentum},
          {"weight_decay", s.weight_decay},
          {"nesterov", s.nesterov},
          {"schedule_gamma", s.schedule_gamma},
          {"schedule_power", s.schedule_power}};
}

std::vector<int> sorted_union(const std::vector<std::vector<int>>& sets) {
  std::set<int> u;
  for (const auto& s : sets) u.insert(s.begin(), s.end());
  return {u.begin(), u.end()};
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  Fields top(root, "config");

  std::string method = to_string(cfg.method);
  top.read("method", method);
  cfg.method = method_from_string(method);
  top.read("seeds", cfg.seeds);
  std::string out = cfg.output_dir.string();
  top.read("output_dir", out);
  cfg.output_dir = out;
  top.read("trace", cfg.trace);
  top.read("plots", cfg.plots);
  top.read("forget_classes", cfg.forget_classes);
  top.read("uc_ratio", cfg.uc_ratio);
  top.read("finetune_fraction", cfg.finetune_fraction);

  if (const json* j = top.child("requests")) {
    Fields f(*j, "requests");
    f.read("sets", cfg.requests.requests);
    f.read("subset_fraction", cfg.requests.subset_fraction);
    f.read("later_epochs", cfg.requests.later_epochs);
    f.finish();
  }
  if (const json* j = top.child("dataset")) {
    Fields f(*j, "dataset");
    auto& s = cfg.dataset.synthetic;
    f.read("num_classes", s.num_classes);
    f.read("dim", s.dim);
    f.read("samples_per_class", s.samples_per_class);
    f.read("cluster_std", s.cluster_std);
    f.read("center_spread", s.center_spread);
    f.read("min_center_distance", s.min_center_distance);
    f.read("target_noise", s.target_noise);
    f.read("rotation_deg", cfg.dataset.rotation_deg);
    f.read("translation", cfg.dataset.translation);
    f.read("train_fraction", cfg.dataset.train_fraction);
    f.read("ood_classes", cfg.dataset.ood_classes);
    f.read("ood_samples_per_class", cfg.dataset.ood_samples_per_class);
    f.finish();
  }
  if (const json* j = top.child("model")) {
    Fields f(*j, "model");
    f.read("layers", cfg.arch.layers);
    std::string act = to_string(cfg.arch.activation);
    f.read("activation", act);
    try {
      cfg.arch.activation = activation_from_string(act);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    f.finish();
  }
  if (const json* j = top.child("source_training")) {
    Fields f(*j, "source_training");
    f.read("epochs", cfg.source.epochs);
    f.read("batch_size", cfg.source.batch_size);
    f.read("smoothing", cfg.source.smoothing);
    read_sgd(f, cfg.source.sgd);
    f.finish();
  }
  if (const json* j = top.child("sfda")) {
    Fields f(*j, "sfda");
    f.read("loss", cfg.sfda_loss);
    f.read("beta", cfg.shot.beta);
    f.read("lambda", cfg.shot.lambda);
    f.read("freeze_head", cfg.shot.freeze_head);
    f.finish();
  }
  if (const json* j = top.child("unlearn")) {
    Fields f(*j, "unlearn");
    auto& u = cfg.unlearn;
    f.read("alpha", u.alpha);
    read_sgd(f, u.sgd);
    f.read("eta_adv", u.eta_adv);
    f.read("eta_init", u.eta_init);
    f.read("init_steps", u.init_steps);
    f.read("init_std", u.init_std);
    f.read("init_confidence", u.init_confidence);
    f.read("epochs", u.epochs);
    f.read("steps_per_epoch", u.steps_per_epoch);
    f.read("num_adv", u.num_adv);
    f.read("batch_size", u.batch_size);
    f.read("audit_every", u.audit_every);
    std::string strategy = to_string(u.strategy);
    f.read("strategy", strategy);
    u.strategy = label_strategy_from_string(strategy);
    if (const json* c = f.child("clamp"); c && !c->is_null()) {
      if (!c->is_array() || c->size() != 2 || !(*c)[0].is_number() || !(*c)[1].is_number())
        throw ConfigError("unlearn.clamp must be null or [low, high]");
      u.clamp = std::pair{(*c)[0].get<double>(), (*c)[1].get<double>()};
    }
    f.finish();
  }
  if (const json* j = top.child("metrics")) {
    Fields f(*j, "metrics");
    f.read("ece_bins", cfg.metrics.ece_bins);
    int n = static_cast<int>(cfg.metrics.thresholds.size());
    f.read("num_thresholds", n);
    if (n < 2) throw ConfigError("metrics.num_thresholds must be at least 2");
    cfg.metrics.thresholds = uniform_thresholds(n);
    f.read("mia_seed", cfg.metrics.mia_seed);
    f.finish();
  }
  if (const json* j = top.child("ablation")) {
    Fields f(*j, "ablation");
    std::vector<std::string> names;
    f.read("strategies", names);
    if (j->contains("strategies")) {
      cfg.ablation.strategies.clear();
      for (const auto& n : names) cfg.ablation.strategies.push_back(label_strategy_from_string(n));
    }
    names.clear();
    f.read("stages", names);
    if (j->contains("stages")) {
      cfg.ablation.stages.clear();
      for (const auto& n : names) cfg.ablation.stages.push_back(stage_from_string(n));
    }
    f.finish();
  }
  top.finish();

  if (cfg.method == Method::CScada) {
    const auto u = sorted_union(cfg.requests.requests);
    if (root.contains("forget_classes")) {
      auto given = cfg.forget_classes;
      std::sort(given.begin(), given.end());
      if (given != u) throw ConfigError("forget_classes must equal the union of the c_scada requests");
    }
    cfg.forget_classes = u;
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

void ExperimentConfig::validate() const {
  const auto& s = dataset.synthetic;
  if (s.num_classes < 4) throw ConfigError("dataset.num_classes must be at least 4");
  if (s.dim < 1 || s.samples_per_class < 2) throw ConfigError("dataset.dim and samples_per_class too small");
  if (!(s.cluster_std > 0.0) || !(s.center_spread > 0.0)) throw ConfigError("dataset spreads must be positive");
  if (!(dataset.train_fraction > 0.0 && dataset.train_fraction < 1.0))
    throw ConfigError("dataset.train_fraction must lie in (0, 1)");
  if (dataset.ood_classes < 1 || dataset.ood_samples_per_class < 2)
    throw ConfigError("at least one OOD class with two samples is needed for the membership attack");
  if (arch.layers.size() < 2) throw ConfigError("model.layers needs an input and a feature size");
  if (arch.input_dim() != s.dim) throw ConfigError("model.layers[0] must equal dataset.dim");
  for (int l : arch.layers)
    if (l < 1) throw ConfigError("model.layers entries must be positive");
  if (source.epochs < 1 || source.batch_size < 1) throw ConfigError("source_training epochs and batch_size must be positive");
  if (!(source.smoothing >= 0.0 && source.smoothing < 1.0)) throw ConfigError("source_training.smoothing must lie in [0, 1)");
  if (!(source.sgd.lr > 0.0)) throw ConfigError("source_training.lr must be positive");
  make_sfda_loss(sfda_loss, shot);
  unlearn.validate();
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (!(finetune_fraction > 0.0 && finetune_fraction <= 1.0)) throw ConfigError("finetune_fraction must lie in (0, 1]");
  if (metrics.ece_bins < 1) throw ConfigError("metrics.ece_bins must be positive");

  std::set<int> forget(forget_classes.begin(), forget_classes.end());
  if (forget.empty()) throw ConfigError("forget_classes must not be empty");
  if (forget.size() != forget_classes.size()) throw ConfigError("forget_classes has duplicates");
  for (int c : forget)
    if (c < 0 || c >= s.num_classes) throw ConfigError("forget class " + std::to_string(c) + " out of range");
  if (static_cast<int>(forget.size()) >= s.num_classes) throw ConfigError("forget_classes covers every class");
  if (method == Method::CScada) {
    try {
      requests.validate(s.num_classes);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("c_scada requests: ") + e.what());
    }
  }
  if (method == Method::UcScada) {
    const long k = static_cast<long>(forget.size()) * uc_ratio;
    if (uc_ratio < 1 || k >= s.num_classes) throw ConfigError("uc_ratio * |forget_classes| must be below num_classes");
  }
}

std::string config_to_json(const ExperimentConfig& cfg, int indent) {
  const auto& s = cfg.dataset.synthetic;
  const auto& u = cfg.unlearn;
  std::vector<std::string> strategies, stages;
  for (auto x : cfg.ablation.strategies) strategies.push_back(to_string(x));
  for (auto x : cfg.ablation.stages) stages.push_back(to_string(x));
  json unlearn = sgd_json(u.sgd);
  unlearn.update(json{{"alpha", u.alpha},
                      {"eta_adv", u.eta_adv},
                      {"eta_init", u.eta_init},
                      {"init_steps", u.init_steps},
                      {"init_std", u.init_std},
                      {"init_confidence", u.init_confidence},
                      {"epochs", u.epochs},
                      {"steps_per_epoch", u.steps_per_epoch},
                      {"num_adv", u.num_adv},
                      {"batch_size", u.batch_size},
                      {"audit_every", u.audit_every},
                      {"strategy", to_string(u.strategy)},
                      {"clamp", u.clamp ? json{u.clamp->first, u.clamp->second} : json(nullptr)}});
  json source = sgd_json(cfg.source.sgd);
  source.update(json{{"epochs", cfg.source.epochs},
                     {"batch_size", cfg.source.batch_size},
                     {"smoothing", cfg.source.smoothing}});
  const json j = {
      {"method", to_string(cfg.method)},
      {"seeds", cfg.seeds},
      {"output_dir", cfg.output_dir.string()},
      {"trace", cfg.trace},
      {"plots", cfg.plots},
      {"forget_classes", cfg.forget_classes},
      {"uc_ratio", cfg.uc_ratio},
      {"finetune_fraction", cfg.finetune_fraction},
      {"requests",
       {{"sets", cfg.requests.requests},
        {"subset_fraction", cfg.requests.subset_fraction},
        {"later_epochs", cfg.requests.later_epochs}}},
      {"dataset",
       {{"num_classes", s.num_classes},
        {"dim", s.dim},
        {"samples_per_class", s.samples_per_class},
        {"cluster_std", s.cluster_std},
        {"center_spread", s.center_spread},
        {"min_center_distance", s.min_center_distance},
        {"target_noise", s.target_noise},
        {"rotation_deg", cfg.dataset.rotation_deg},
        {"translation", cfg.dataset.translation},
        {"train_fraction", cfg.dataset.train_fraction},
        {"ood_classes", cfg.dataset.ood_classes},
        {"ood_samples_per_class", cfg.dataset.ood_samples_per_class}}},
      {"model", {{"layers", cfg.arch.layers}, {"activation", to_string(cfg.arch.activation)}}},
      {"source_training", source},
      {"sfda", {{"loss", cfg.sfda_loss}, {"beta", cfg.shot.beta}, {"lambda", cfg.shot.lambda}, {"freeze_head", cfg.shot.freeze_head}}},
      {"unlearn", unlearn},
      {"metrics",
       {{"ece_bins", cfg.metrics.ece_bins},
        {"num_thresholds", cfg.metrics.thresholds.size()},
        {"mia_seed", cfg.metrics.mia_seed}}},
      {"ablation", {{"strategies", strategies}, {"stages", stages}}},
  };
  return j.dump(indent);
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string canonical = config_to_json(cfg, -1);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

// --- pipelines -------------------------------------------------------------

namespace {

enum Stream : std::uint64_t {
  kDomains = 1,
  kSourceSplit,
  kTargetSplit,
  kOod,
  kModelInit,
  kSourceTrain,
  kUnlearn,
  kFinetuneSubset,
  kRetrainInit,
  kRetrainTrain,
  kMia,
};

std::set<int> as_set(const std::vector<int>& v) { return {v.begin(), v.end()}; }

std::set<int> complement(int num_classes, const std::set<int>& s) {
  std::set<int> out;
  for (int c = 0; c < num_classes; ++c)
    if (!s.count(c)) out.insert(c);
  return out;
}

MetricOptions seeded_metrics(const ExperimentConfig& cfg, std::uint64_t seed) {
  MetricOptions m = cfg.metrics;
  m.mia_seed = derive_seed(cfg.metrics.mia_seed ^ seed, kMia);
  return m;
}

}  // namespace

UnlearnConfig seeded(const UnlearnConfig& cfg, std::uint64_t seed) {
  UnlearnConfig out = cfg;
  out.seed = derive_seed(seed, kUnlearn);
  return out;
}

World prepare_world(const ExperimentConfig& cfg, std::uint64_t seed) {
  SyntheticSpec spec = cfg.dataset.synthetic;
  spec.shift = AffineShift::rotation(spec.dim, cfg.dataset.rotation_deg, cfg.dataset.translation);
  SyntheticDomains domains = make_synthetic_domains(spec, derive_seed(seed, kDomains));

  auto [source_train, source_test] = train_test_split(domains.source, cfg.dataset.train_fraction, derive_seed(seed, kSourceSplit));
  auto [target_train, target_test] = train_test_split(domains.target, cfg.dataset.train_fraction, derive_seed(seed, kTargetSplit));

  const std::set<int> forget = as_set(cfg.forget_classes);
  const std::set<int> retain = complement(spec.num_classes, forget);

  OodSpec ood;
  ood.num_classes = cfg.dataset.ood_classes;
  ood.samples_per_class = cfg.dataset.ood_samples_per_class;
  ood.cluster_std = spec.cluster_std;
  ood.center_spread = spec.center_spread;
  ood.reference_centers.resize(domains.source_centers.rows() * 2, spec.dim);
  ood.reference_centers << domains.source_centers, domains.target_centers;

  SourceTrainOptions train = cfg.source;
  train.seed = derive_seed(seed, kSourceTrain);
  Classifier source_model = train_source(Classifier(cfg.arch, spec.num_classes, derive_seed(seed, kModelInit)),
                                         source_train, train);

  World w{std::move(domains),
          std::move(source_train),
          std::move(source_test),
          std::move(target_train),
          std::move(target_test),
          {},
          {},
          sample_ood_classes(ood, derive_seed(seed, kOod)),
          std::move(source_model)};
  w.target_adapt = w.target_train.filter(retain).adaptation_view();
  w.eval = EvalSets{w.target_test.filter(retain), w.domains.target.filter(forget), w.ood};
  return w;
}

EvalSets eval_sets_for(const World& world, const std::vector<int>& forget_classes) {
  return {world.eval.retain, world.domains.target.filter(as_set(forget_classes)), world.eval.ood};
}

Classifier run_original(const ExperimentConfig& cfg, const World& world, std::uint64_t seed) {
  auto loss = make_sfda_loss(cfg.sfda_loss, cfg.shot);
  return run_sfda_only(world.source_model, world.target_adapt, *loss, seeded(cfg.unlearn, seed));
}

Classifier run_retrain_oracle(const ExperimentConfig& cfg, const World& world, std::uint64_t seed) {
  const auto& spec = cfg.dataset.synthetic;
  const DomainDataset retain_source = world.source_train.filter(complement(spec.num_classes, as_set(cfg.forget_classes)));
  SourceTrainOptions train = cfg.source;
  train.seed = derive_seed(seed, kRetrainTrain);
  const Classifier model =
      train_source(Classifier(cfg.arch, spec.num_classes, derive_seed(seed, kRetrainInit)), retain_source, train);
  auto loss = make_sfda_loss(cfg.sfda_loss, cfg.shot);
  return run_sfda_only(model, world.target_adapt, *loss, seeded(cfg.unlearn, seed));
}

Classifier run_finetune_baseline(const ExperimentConfig& cfg, const World& world, std::uint64_t seed) {
  const Eigen::Index n = world.target_adapt.size();
  const auto count = std::clamp<Eigen::Index>(
      static_cast<Eigen::Index>(std::llround(cfg.finetune_fraction * static_cast<double>(n))), 1, n);
  const UnlabeledDataset subset = world.target_adapt.subset(sample_indices(n, count, derive_seed(seed, kFinetuneSubset)));
  auto loss = make_sfda_loss(cfg.sfda_loss, cfg.shot);
  return run_sfda_only(world.source_model, subset, *loss, seeded(cfg.unlearn, seed));
}

SeedOutcome run_method(const ExperimentConfig& cfg, const World& world, std::uint64_t seed, const RunHooks& hooks) {
  const auto start = std::chrono::steady_clock::now();
  const MetricOptions metrics = seeded_metrics(cfg, seed);
  const UnlearnConfig ucfg = seeded(cfg.unlearn, seed);
  auto loss = make_sfda_loss(cfg.sfda_loss, cfg.shot);
  SeedOutcome out;
  std::vector<std::pair<std::string, EvalSets>> evals{{to_string(cfg.method), world.eval}};

  switch (cfg.method) {
    case Method::Original:
      out.model = run_original(cfg, world, seed);
      break;
    case Method::Retrain:
      out.model = run_retrain_oracle(cfg, world, seed);
      break;
    case Method::Finetune:
      out.model = run_finetune_baseline(cfg, world, seed);
      break;
    case Method::Scada: {
      ScadaResult r = run_scada_ul(world.source_model, world.target_adapt, cfg.forget_classes, *loss, ucfg, hooks);
      out.model = std::move(r.model);
      out.bank = std::move(r.bank);
      out.history = std::move(r.history);
      break;
    }
    case Method::UcScada: {
      UnknownClassResult r = run_uc_scada(world.source_model, world.target_adapt,
                                          static_cast<int>(cfg.forget_classes.size()), *loss, ucfg, cfg.uc_ratio, hooks);
      out.predicted_forget = r.predicted;
      out.model = std::move(r.run.model);
      out.bank = std::move(r.run.bank);
      out.history = std::move(r.run.history);
      break;
    }
    case Method::CScada: {
      ContinualResult r = run_c_scada(world.source_model, world.target_adapt, cfg.requests, *loss, ucfg, hooks);
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::vector<int> cumulative;
      for (std::size_t i = 0; i < r.stages.size(); ++i) {
        cumulative.insert(cumulative.end(), cfg.requests.requests[i].begin(), cfg.requests.requests[i].end());
        MetricsReport rep = evaluate(r.stages[i].model, eval_sets_for(world, cumulative), metrics);
        rep.method = "c_scada_T" + std::to_string(i + 1);
        rep.seed = seed;
        rep.wall_time_s = elapsed;
        out.reports.push_back(std::move(rep));
        out.history.insert(out.history.end(), r.stages[i].history.begin(), r.stages[i].history.end());
      }
      out.model = r.final_model();
      out.bank = r.stages.back().bank;
      return out;
    }
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  MetricsReport rep = evaluate(*out.model, world.eval, metrics);
  rep.method = to_string(cfg.method);
  rep.seed = seed;
  rep.wall_time_s = elapsed;
  out.reports.push_back(std::move(rep));
  return out;
}

// --- persistence -----------------------------------------------------------

namespace {

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw Error("cannot create output directory " + dir.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

void plot_history(const std::vector<StepRecord>& history, const std::filesystem::path& path, const std::string& title) {
  Series mu{"L_MU", {}, "#d62728"}, adv{"L_ADV", {}, "#1f77b4"}, sfda{"L_SFDA", {}, "#2ca02c"};
  for (const auto& r : history) {
    mu.y.push_back(r.mu_loss);
    adv.y.push_back(r.adv_loss);
    sfda.y.push_back(r.sfda_loss);
  }
  write_line_chart({mu, adv, sfda}, {title, "step", "loss"}, path);
}

std::string seed_file(const MetricsReport& r) { return r.method + "_seed" + std::to_string(r.seed) + ".json"; }

}  // namespace

void write_results_csv(const std::vector<MetricsReport>& reports, const std::filesystem::path& path) {
  std::ostringstream s;
  s << std::setprecision(10);
  s << "method,seed,retain_acc,forget_acc,score,mia_pct,ece_retain,ece_forget,wall_time_s\n";
  for (const auto& r : reports)
    s << r.method << ',' << r.seed << ',' << r.retain_acc << ',' << r.forget_acc << ',' << r.unlearn_score << ','
      << r.mia_pct << ',' << r.ece_retain << ',' << r.ece_forget << ',' << r.wall_time_s << '\n';
  write_text(path, s.str());
}

void write_summary_csv(const std::vector<MetricsReport>& reports, const std::filesystem::path& path) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const MetricsReport*>> groups;
  for (const auto& r : reports) {
    if (!groups.count(r.method)) order.push_back(r.method);
    groups[r.method].push_back(&r);
  }
  using Getter = double (*)(const MetricsReport&);
  const std::vector<std::pair<const char*, Getter>> cols{
      {"retain_acc", [](const MetricsReport& r) { return r.retain_acc; }},
      {"forget_acc", [](const MetricsReport& r) { return r.forget_acc; }},
      {"score", [](const MetricsReport& r) { return r.unlearn_score; }},
      {"mia_pct", [](const MetricsReport& r) { return r.mia_pct; }},
      {"ece_retain", [](const MetricsReport& r) { return r.ece_retain; }},
      {"ece_forget", [](const MetricsReport& r) { return r.ece_forget; }},
      {"wall_time_s", [](const MetricsReport& r) { return r.wall_time_s; }},
  };
  std::ostringstream s;
  s << std::setprecision(10) << "method,n";
  for (const auto& [name, _] : cols) s << ',' << name << "_mean," << name << "_std";
  s << '\n';
  for (const auto& m : order) {
    const auto& g = groups[m];
    s << m << ',' << g.size();
    for (const auto& [_, get] : cols) {
      double mean = 0.0;
      for (const auto* r : g) mean += get(*r);
      mean /= static_cast<double>(g.size());
      double var = 0.0;
      for (const auto* r : g) var += (get(*r) - mean) * (get(*r) - mean);
      const double sd = g.size() > 1 ? std::sqrt(var / static_cast<double>(g.size() - 1)) : 0.0;
      s << ',' << mean << ',' << sd;
    }
    s << '\n';
  }
  write_text(path, s.str());
}

std::vector<MetricsReport> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ensure_dir(cfg.output_dir);
  json meta = json::parse(config_to_json(cfg));
  meta["config_hash"] = config_hash(cfg);
  write_text(cfg.output_dir / "config.json", meta.dump(2));

  std::vector<MetricsReport> all;
  for (std::uint64_t seed : cfg.seeds) {
    spdlog::info("seed {}: preparing data and source model", seed);
    const World world = prepare_world(cfg, seed);
    std::optional<TraceWriter> trace;
    RunHooks hooks;
    if (cfg.trace) {
      trace.emplace(cfg.output_dir / ("trace_" + to_string(cfg.method) + "_seed" + std::to_string(seed) + ".jsonl"));
      hooks.trace = &*trace;
    }
    spdlog::info("seed {}: running {}", seed, to_string(cfg.method));
    SeedOutcome out = run_method(cfg, world, seed, hooks);
    for (auto& r : out.reports) {
      spdlog::info("{} seed {}: retain {:.2f}%, forget {:.2f}%, score {:.3f}, MIA {:.1f}%", r.method, seed,
                   r.retain_acc, r.forget_acc, r.unlearn_score, r.mia_pct);
      write_text(cfg.output_dir / seed_file(r), to_json(r));
      all.push_back(r);
    }
    if (cfg.plots && !out.history.empty())
      plot_history(out.history,
                   cfg.output_dir / ("loss_" + to_string(cfg.method) + "_seed" + std::to_string(seed) + ".svg"),
                   to_string(cfg.method) + " losses, seed " + std::to_string(seed));
  }
  write_results_csv(all, cfg.output_dir / "results.csv");
  write_summary_csv(all, cfg.output_dir / "summary.csv");
  return all;
}

std::vector<MetricsReport> run_ablation(const ExperimentConfig& cfg) {
  cfg.validate();
  ensure_dir(cfg.output_dir);
  std::vector<MetricsReport> all;
  for (std::uint64_t seed : cfg.seeds) {
    const World world = prepare_world(cfg, seed);
    const auto loss = make_sfda_loss(cfg.sfda_loss, cfg.shot);
    const UnlearnConfig ucfg = seeded(cfg.unlearn, seed);
    const MetricOptions metrics = seeded_metrics(cfg, seed);
    if (!cfg.ablation.strategies.empty()) {
      auto reports = labeling_ablation(world.source_model, world.target_adapt, cfg.forget_classes,
                                       cfg.ablation.strategies, *loss, ucfg, world.eval, metrics);
      for (LabelStrategy s : cfg.ablation.strategies) {
        reports[s].seed = seed;
        all.push_back(reports[s]);
      }
    }
    for (Stage st : cfg.ablation.stages) {
      StageResult r = stage_ablation(world.source_model, world.target_adapt, cfg.forget_classes, st, *loss, ucfg,
                                     world.eval, metrics);
      r.report.seed = seed;
      all.push_back(r.report);
    }
  }
  for (const auto& r : all) {
    spdlog::info("{} seed {}: retain {:.2f}%, forget {:.2f}%", r.method, r.seed, r.retain_acc, r.forget_acc);
    write_text(cfg.output_dir / seed_file(r), to_json(r));
  }
  write_results_csv(all, cfg.output_dir / "ablation.csv");
  write_summary_csv(all, cfg.output_dir / "ablation_summary.csv");
  return all;
}

AuditSummary run_verify(const ExperimentConfig& cfg) {
  cfg.validate();
  ensure_dir(cfg.output_dir);
  AuditSummary sum;
  json per_seed = json::array();
  for (std::uint64_t seed : cfg.seeds) {
    const World world = prepare_world(cfg, seed);
    auto loss = make_sfda_loss(cfg.sfda_loss, cfg.shot);
    UnlearnConfig ucfg = seeded(cfg.unlearn, seed);
    ucfg.audit_every = 1;
    const ScadaResult r = run_scada_ul(world.source_model, world.target_adapt, cfg.forget_classes, *loss, ucfg);
    long audits = 0, holds = 0;
    for (const auto& rec : r.history)
      for (const auto& a : rec.audits) {
        ++audits;
        holds += a.holds ? 1 : 0;
        sum.max_closed_form_error = std::max(sum.max_closed_form_error, a.closed_form_error);
        sum.min_delta = std::min(sum.min_delta, a.delta);
        sum.max_delta = std::max(sum.max_delta, a.delta);
      }
    sum.audits += audits;
    sum.holds += holds;
    per_seed.push_back({{"seed", seed}, {"audits", audits}, {"holds", holds}});
  }
  const json j = {{"audits", sum.audits},
                  {"holds", sum.holds},
                  {"max_closed_form_error", sum.max_closed_form_error},
                  {"min_delta", sum.min_delta},
                  {"max_delta", sum.max_delta},
                  {"per_seed", per_seed}};
  write_text(cfg.output_dir / "verify.json", j.dump(2));
  return sum;
}

std::vector<MetricsReport> rebuild_report(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("no such directory " + dir.string());
  std::vector<MetricsReport> all;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.path().extension() != ".json" || name.find("_seed") == std::string::npos) continue;
    std::ifstream in(entry.path());
    std::stringstream buf;
    buf << in.rdbuf();
    all.push_back(metrics_from_json(buf.str()));
  }
  std::sort(all.begin(), all.end(), [](const MetricsReport& a, const MetricsReport& b) {
    return std::tie(a.method, a.seed) < std::tie(b.method, b.seed);
  });
  write_results_csv(all, dir / "results.csv");
  write_summary_csv(all, dir / "summary.csv");
  return all;
}

}  // namespace scada
