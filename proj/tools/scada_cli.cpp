// scada: run, ablate, verify and report unlearning experiments.
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "scada/error.hpp"
#include "scada/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool trace = false;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required) {
  auto* opt = cmd->add_option("--config", f.config, "experiment config (JSON)");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "run this seed only, overriding the config's list");
  cmd->add_flag("--trace", f.trace, "write a JSON-lines step trace");
  cmd->add_option("--out", f.out, "output directory (overrides the config)");
}

scada::ExperimentConfig resolve(const CommonFlags& f) {
  scada::ExperimentConfig cfg = f.config.empty() ? scada::ExperimentConfig{} : scada::load_config(f.config);
  if (f.seed) cfg.seeds = {*f.seed};
  if (f.trace) cfg.trace = true;
  if (!f.out.empty()) cfg.output_dir = f.out;
  cfg.validate();
  return cfg;
}

void print_reports(const std::vector<scada::MetricsReport>& reports) {
  std::printf("%-18s %6s %10s %10s %7s %7s\n", "method", "seed", "retain%", "forget%", "score", "MIA%");
  for (const auto& r : reports)
    std::printf("%-18s %6llu %10.2f %10.2f %7.3f %7.1f\n", r.method.c_str(),
                static_cast<unsigned long long>(r.seed), r.retain_acc, r.forget_acc, r.unlearn_score, r.mia_pct);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Source-free adaptation with class unlearning"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "only log warnings and errors");

  CommonFlags run_flags, ablate_flags, verify_flags, report_flags;
  auto* run = app.add_subcommand("run", "run the configured method over all seeds");
  add_common(run, run_flags, true);
  auto* ablate = app.add_subcommand("ablate", "labeling-strategy and stage ablations");
  add_common(ablate, ablate_flags, true);
  auto* verify = app.add_subcommand("verify", "audit the gradient-flow bound on every step");
  add_common(verify, verify_flags, true);
  auto* report = app.add_subcommand("report", "rebuild CSV summaries from per-seed JSON files");
  add_common(report, report_flags, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  spdlog::set_level(quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    if (run->parsed()) {
      print_reports(scada::run_experiment(resolve(run_flags)));
    } else if (ablate->parsed()) {
      print_reports(scada::run_ablation(resolve(ablate_flags)));
    } else if (verify->parsed()) {
      const auto s = scada::run_verify(resolve(verify_flags));
      std::printf("audited samples: %ld, bound holds: %ld (%.2f%%)\n", s.audits, s.holds,
                  s.audits ? 100.0 * static_cast<double>(s.holds) / static_cast<double>(s.audits) : 0.0);
      std::printf("delta range: [%.3g, %.3g], max closed-form error: %.3g\n", s.min_delta, s.max_delta,
                  s.max_closed_form_error);
      return s.holds == s.audits && s.max_closed_form_error <= 1e-6 ? kExitOk : kExitFailure;
    } else if (report->parsed()) {
      std::string dir = report_flags.out;
      if (dir.empty()) dir = resolve(report_flags).output_dir.string();
      print_reports(scada::rebuild_report(dir));
    }
  } catch (const scada::ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kExitConfig;
  } catch (const scada::NumericalError& e) {
    spdlog::error("numerical abort: {}", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
  return kExitOk;
}
