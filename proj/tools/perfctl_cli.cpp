#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "perfctl/config.hpp"
#include "perfctl/experiment.hpp"
#include "perfctl/io.hpp"

namespace {

using namespace perfctl;

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitDiverged = 3;

StepSizePlan resolve_plan(const LoadedConfig& cfg, const ConstantsBundle& bundle) {
  switch (cfg.run.plan_kind) {
    case RunSettings::PlanKind::Auto:
      return find_valid_plan(bundle);
    case RunSettings::PlanKind::Diminishing:
      return plan_diminishing_steps(bundle, cfg.run.phi1, cfg.run.phi2);
    case RunSettings::PlanKind::Constant: {
      StepSizePlan plan = validate_step_sizes_general(
          bundle, std::vector<Scalar>(static_cast<std::size_t>(cfg.run.rsgd_N) + 1, cfg.run.eta));
      plan.kind = StepPlanKind::Constant;
      plan.eta = cfg.run.eta;
      return plan;
    }
    case RunSettings::PlanKind::Custom:
      return validate_step_sizes_general(bundle, cfg.run.etas);
  }
  throw std::logic_error("unknown plan kind");
}

int cmd_simulate(const std::string& config_path, const std::string& out_path,
                 std::uint64_t seed) {
  const LoadedConfig cfg = load_config_file(config_path);
  const ControlInstance& inst = cfg.instance;
  TrajectoryRecord rec = simulate_trajectory(inst.system, inst.policy, inst.map, inst.noise,
                                             inst.x0, SeedPair{seed, 0});
  fill_stage_costs(rec, inst.system, inst.cost, inst.policy);

  std::vector<std::string> header = {"t"};
  for (int i = 0; i < inst.system.dx; ++i) header.push_back("x" + std::to_string(i));
  for (int i = 0; i < inst.system.du; ++i) header.push_back("u" + std::to_string(i));
  for (int i = 0; i < inst.system.dx; ++i) header.push_back("w" + std::to_string(i));
  header.push_back("stage_cost");

  std::vector<std::vector<std::string>> rows;
  for (int t = 0; t <= inst.system.T; ++t) {
    std::vector<std::string> row = {std::to_string(t)};
    for (int i = 0; i < inst.system.dx; ++i) row.push_back(format_number(rec.states[t](i)));
    for (int i = 0; i < inst.system.du; ++i)
      row.push_back(t < inst.system.T ? format_number(rec.actions[t](i)) : std::string());
    for (int i = 0; i < inst.system.dx; ++i)
      row.push_back(t < inst.system.T ? format_number(rec.noises[t](i)) : std::string());
    row.push_back(format_number(rec.stage_costs[t]));
    rows.push_back(std::move(row));
  }
  write_file(out_path, write_csv(header, rows));

  KeyValueWriter meta;
  meta.add("config_hash", hex64(fnv1a64(cfg.canonical)));
  meta.add("seed", static_cast<long>(seed));
  write_file(out_path + ".meta", meta.str());
  return kExitOk;
}

int cmd_analyze(const std::string& config_path, const std::string& out_path) {
  const LoadedConfig cfg = load_config_file(config_path);
  const ControlInstance& inst = cfg.instance;
  const SensitivityProfile profile = inst.profile(cfg.run.regime, cfg.run.zeta);
  const ConstantsBundle bundle = compute_constants(inst.system, inst.cost.mu(),
                                                   inst.cost.sigma_s(), inst.cost.G(), profile,
                                                   inst.policy.m_bar());
  const ConditionReport report = check_psc_condition(bundle);
  const StabilityCertificate cert = check_strong_stability(inst.system);

  KeyValueWriter kv;
  kv.add("config_hash", hex64(fnv1a64(cfg.canonical)));
  kv.add("holds", report.holds);
  kv.add("lhs", report.lhs);
  kv.add("mu_tilde", report.rhs);
  kv.add("margin", report.margin);
  kv.add("contraction_ratio", report.contraction_ratio);
  kv.add("at_boundary", report.at_boundary);
  kv.add("mu_bar", bundle.mu_bar);
  kv.add("c1", bundle.c1);
  kv.add("c2", bundle.c2);
  kv.add("c3", bundle.c3);
  kv.add("c4", bundle.c4);
  kv.add("c5", bundle.c5);
  kv.add("sum_lambda", bundle.sum_lambda);
  kv.add_schedule("alpha", bundle.alpha);
  kv.add_schedule("beta", bundle.beta);
  kv.add_schedule("lambda", std::vector<Scalar>(bundle.lambda.begin() + 1, bundle.lambda.end()));
  kv.add_schedule("nu", std::vector<Scalar>(bundle.nu.begin() + 1, bundle.nu.end()));
  kv.add_schedule("vartheta",
                  std::vector<Scalar>(bundle.vartheta.begin() + 1, bundle.vartheta.end()));
  kv.add_schedule("eps", bundle.eps);
  kv.add_schedule("xi", bundle.xi);
  kv.add_schedule("per_step_contribution", report.per_step);
  switch (cert.verdict) {
    case StabilityVerdict::CertifiedStronglyStable:
      kv.add("stability", std::string("certified"));
      break;
    case StabilityVerdict::DeclaredOnly:
      kv.add("stability", std::string("declared_only"));
      break;
    case StabilityVerdict::NotCertified:
      kv.add("stability", std::string("not_certified"));
      break;
  }
  kv.add("stability_residual", cert.residual);
  for (std::size_t i = 0; i < report.notes.size(); ++i)
    kv.add("note_" + std::to_string(i), report.notes[i]);
  if (cfg.run.regime == RegimeHint::AlmostSurelyStable && cfg.run.zeta > 0.0) {
    const ThresholdReport thr = stable_case_threshold(bundle, cfg.run.zeta);
    kv.add("stable_threshold", thr.threshold);
    kv.add("stable_sum_eps", thr.observed);
    kv.add("stable_satisfied", thr.satisfied);
  }
  if (cfg.run.regime == RegimeHint::AlmostSurelyUnstable && cfg.run.zeta > 1.0)
    kv.add_schedule("unstable_eps_bounds", unstable_case_schedule(bundle, cfg.run.zeta));

  write_file(out_path, kv.str());
  return kExitOk;
}

int cmd_rsgd(const std::string& config_path, const std::string& out_path, std::uint64_t seed,
             int jobs) {
  const LoadedConfig cfg = load_config_file(config_path);
  const ControlInstance& inst = cfg.instance;
  const ConstantsBundle bundle = inst.constants();
  const StepSizePlan plan = resolve_plan(cfg, bundle);
  if (!plan.valid) {
    std::cerr << "invalid step-size plan:\n";
    for (const auto& v : plan.violated) std::cerr << "  " << v << "\n";
    return kExitConfigError;
  }

  RsgdConfig rsgd;
  rsgd.plan = plan;
  rsgd.N = cfg.run.rsgd_N;
  rsgd.log_every = cfg.run.rsgd_log_every;
  rsgd.batch = cfg.run.rsgd_batch;
  rsgd.seed = SeedPair{seed, 1};
  RunTrace trace = rsgd_run(inst, rsgd);

  const SeedPair eval_seed{seed ^ 0xe7a1e7a1e7a1e7a1ULL, 0};
  std::vector<TraceRow> rows;
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    Policy at = inst.policy;
    at.params = trace.iterates[i];
    const ShiftedExpectation cost =
        expected_cost_mc(inst.system, inst.cost, inst.map, inst.noise, at, at, inst.x0,
                         cfg.run.cost_samples, eval_seed, jobs);
    rows.push_back({trace.steps[i], std::nullopt, cost.estimate, cost.std_error});
  }
  write_file(out_path, write_trace_csv(rows));

  KeyValueWriter meta;
  meta.add("config_hash", hex64(fnv1a64(cfg.canonical)));
  meta.add("seed", static_cast<long>(seed));
  meta.add("plan_phi1", plan.phi1);
  meta.add("plan_phi2", plan.phi2);
  meta.add("plan_phi3", plan.phi3);
  meta.add("diverged", trace.diverged);
  meta.add("max_noise_recovery_error", trace.max_noise_recovery_error);
  write_file(out_path + ".meta", meta.str());
  return trace.diverged ? kExitDiverged : kExitOk;
}

int cmd_rrm(const std::string& config_path, const std::string& out_path, std::uint64_t seed) {
  const LoadedConfig cfg = load_config_file(config_path);
  const ControlInstance& inst = cfg.instance;
  InnerSolveOptions inner;
  inner.seed = SeedPair{seed, 0};
  Policy start = inst.policy;
  const FixedPointResult fp =
      rrm_run(inst, start, cfg.run.rrm_max_iters, cfg.run.rrm_tol, inner);

  std::vector<std::vector<std::string>> rows;
  for (std::size_t n = 0; n < fp.gaps.size(); ++n)
    rows.push_back({std::to_string(n + 1), format_number(fp.gaps[n])});
  write_file(out_path, write_csv({"n", "gap"}, rows));

  KeyValueWriter meta;
  meta.add("config_hash", hex64(fnv1a64(cfg.canonical)));
  meta.add("seed", static_cast<long>(seed));
  meta.add("converged", fp.converged);
  meta.add("iterations", static_cast<long>(fp.iterations));
  meta.add("residual", fp.residual);
  write_file(out_path + ".meta", meta.str());
  return fp.converged ? kExitOk : kExitDiverged;
}

int cmd_stock(const std::string& schedule_name, const std::string& schedule_file,
              const std::string& scale_name, const std::string& regime_name,
              std::uint64_t seed, const std::string& out_dir, int jobs, long cost_samples,
              int log_every) {
  const StockScale scale = scale_name == "paper" ? StockScale::Paper : StockScale::Reduced;
  StockRegime regime = StockRegime::Stable;
  if (regime_name == "unstable") regime = StockRegime::Unstable;
  else if (regime_name == "general") regime = StockRegime::General;

  StockMarketConfig cfg = stock_preset(regime, scale, seed);
  const PaperSchedules schedules = paper_schedules(cfg.T);
  SensitivitySchedule schedule;
  if (schedule_name == "ascend") schedule = schedules.ascend;
  else if (schedule_name == "descend") schedule = schedules.descend;
  else if (schedule_name == "random") schedule = schedules.random;
  else if (schedule_name == "file") {
    schedule = load_schedule_file(schedule_file);
    if (static_cast<int>(schedule.values.size()) != cfg.T) {
      std::cerr << "schedule file must have exactly " << cfg.T << " values\n";
      return kExitConfigError;
    }
  } else {
    std::cerr << "unknown schedule '" << schedule_name << "'\n";
    return kExitConfigError;
  }

  ExperimentOptions options;
  options.regime = regime;
  options.jobs = jobs;
  options.cost_samples = cost_samples;
  options.log_every = log_every;
  const ExperimentOutput out = run_experiment(cfg, schedule, options);

  std::filesystem::create_directories(out_dir);
  const std::string base = out_dir + "/trace_" + schedule_name;
  write_file(base + ".csv", out.csv());
  write_file(base + ".meta", out.metadata());
  return out.diverged ? kExitDiverged : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"performative control of linear dynamical systems"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  int jobs = 1;
  app.add_option("--config", config_path, "instance configuration file (JSON)");
  app.add_option("--seed", seed, "base seed");
  app.add_option("--jobs", jobs, "worker threads for parallel replicates")
      ->check(CLI::PositiveNumber);

  std::string out_path = "out.csv";
  std::string out_dir = "out";
  std::string schedule = "ascend";
  std::string schedule_file;
  std::string scale = "reduced";
  std::string regime = "stable";
  long cost_samples = 200;
  int log_every = 1;

  auto* sim = app.add_subcommand("simulate", "roll out one trajectory to CSV");
  sim->add_option("--out", out_path, "output CSV path");

  auto* analyze = app.add_subcommand("analyze", "constants bundle and existence condition");
  analyze->add_option("--out", out_path, "output key=value path");

  auto* rsgd = app.add_subcommand("rsgd", "repeated stochastic gradient descent");
  rsgd->add_option("--out", out_path, "output trace CSV path");

  auto* rrm = app.add_subcommand("rrm", "repeated risk minimization fixed point");
  rrm->add_option("--out", out_path, "output CSV path");

  auto* stock = app.add_subcommand("stock", "stock-market experiment");
  stock->add_option("--schedule", schedule, "ascend|descend|random|file");
  stock->add_option("--schedule-file", schedule_file, "schedule file for --schedule file");
  stock->add_option("--scale", scale, "paper|reduced");
  stock->add_option("--regime", regime, "stable|unstable|general");
  stock->add_option("--out", out_dir, "output directory");
  stock->add_option("--cost-samples", cost_samples, "MC samples per logged iterate");
  stock->add_option("--log-every", log_every, "log every k-th iterate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  try {
    if (sim->parsed()) {
      if (config_path.empty()) throw std::invalid_argument("--config is required");
      return cmd_simulate(config_path, out_path, seed);
    }
    if (analyze->parsed()) {
      if (config_path.empty()) throw std::invalid_argument("--config is required");
      return cmd_analyze(config_path, out_path);
    }
    if (rsgd->parsed()) {
      if (config_path.empty()) throw std::invalid_argument("--config is required");
      return cmd_rsgd(config_path, out_path, seed, jobs);
    }
    if (rrm->parsed()) {
      if (config_path.empty()) throw std::invalid_argument("--config is required");
      return cmd_rrm(config_path, out_path, seed);
    }
    if (stock->parsed()) {
      if (scale != "paper" && scale != "reduced")
        throw std::invalid_argument("--scale must be paper or reduced");
      if (regime != "stable" && regime != "unstable" && regime != "general")
        throw std::invalid_argument("--regime must be stable, unstable or general");
      return cmd_stock(schedule, schedule_file, scale, regime, seed, out_dir, jobs,
                       cost_samples, log_every);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitConfigError;
}
