#include "perfctl/experiment.hpp"

#include <algorithm>
#include <cmath>

namespace perfctl {

StockMarketConfig stock_preset(StockRegime regime, StockScale scale, std::uint64_t seed) {
  StockMarketConfig cfg;
  cfg.seed = seed;
  if (scale == StockScale::Reduced) {
    cfg.L = 3;
    cfg.T = 12;
    cfg.N = 8000;
    cfg.eta_phi1 = 4.0;  // practical diminishing steps, 0.02 decaying as 1/n
    cfg.eta_phi2 = 200.0;
  }
  switch (regime) {
    case StockRegime::Stable:
      break;  // verbatim configuration
    case StockRegime::Unstable: {
      // narrow clip band and a boosted riskless rate so that exp(g(v)) > 1
      // for every clipped v: each A_t carries a daily growth factor above
      // one while the total amplification stays numerically tame
      cfg.vol_clip = 0.15;
      const Scalar c = cfg.vol_clip;
      cfg.r = 0.5 * c * c + 1.15 * c * std::sqrt(static_cast<Scalar>(cfg.T));
      cfg.sens_scale = 8.0;  // moves the schedule into the responsive band
      cfg.eta_phi1 = 0.0;
      cfg.N = 2000;
      cfg.eta = scale == StockScale::Paper ? 2e-5 : 1e-4;
      break;
    }
    case StockRegime::General:
      cfg.sens_scale = 8.0;  // largest days reach the interior of the clip range
      break;
  }
  return cfg;
}

std::string describe_stock_config(const StockMarketConfig& cfg,
                                  const SensitivitySchedule& schedule) {
  KeyValueWriter kv;
  kv.add("L", static_cast<long>(cfg.L));
  kv.add("T", static_cast<long>(cfg.T));
  kv.add("r", cfg.r);
  kv.add("vol_std", cfg.vol_std);
  kv.add("vol_clip", cfg.vol_clip);
  kv.add("noise_lo", cfg.noise_lo);
  kv.add("noise_hi", cfg.noise_hi);
  kv.add("N", cfg.N);
  kv.add("eta", cfg.eta);
  kv.add("seed", static_cast<long>(cfg.seed));
  kv.add("sens_scale", cfg.sens_scale);
  kv.add("kappa", cfg.kappa);
  kv.add("gamma", cfg.gamma);
  kv.add("schedule", schedule.name);
  kv.add_schedule("schedule_values", schedule.values);
  return kv.str();
}

RearrangementGate propagation_rearrangement_gate(const ConstantsBundle& bundle) {
  std::vector<Scalar> tails(bundle.T, 0.0);
  Scalar tail = 0.0;
  for (int t = bundle.T - 1; t >= 0; --t) {
    tail += bundle.nu[t + 1];
    tails[t] = tail;
  }
  RearrangementGate gate;
  for (int t = 0; t < bundle.T; ++t) gate.sum += bundle.eps[t] * tails[t];

  // tails decrease in t, so pairing small eps with early steps (ascending
  // order) minimizes the weighted sum and the reversed order maximizes it
  std::vector<Scalar> sorted_eps = bundle.eps;
  std::sort(sorted_eps.begin(), sorted_eps.end());
  for (int t = 0; t < bundle.T; ++t) {
    gate.best += sorted_eps[t] * tails[t];
    gate.worst += sorted_eps[bundle.T - 1 - t] * tails[t];
  }
  if (gate.worst <= 0.0) {
    gate.compatible = true;
    return gate;
  }
  const Scalar midpoint = std::sqrt(gate.best * gate.worst);
  gate.compatible = gate.sum <= midpoint * (1.0 + 1e-12);
  return gate;
}

namespace {

void evaluate_costs(const ControlInstance& inst, const StockMarketConfig& cfg,
                    const ExperimentOptions& options, ExperimentOutput& out) {
  const SeedPair eval_seed{cfg.seed ^ 0xe7a1e7a1e7a1e7a1ULL, 0};
  out.rows.clear();
  out.rows.reserve(out.trace.steps.size());
  for (std::size_t i = 0; i < out.trace.steps.size(); ++i) {
    Policy at = inst.policy;
    at.params = out.trace.iterates[i];
    const ShiftedExpectation cost =
        expected_cost_mc(inst.system, inst.cost, inst.map, inst.noise, at, at, inst.x0,
                         options.cost_samples, eval_seed, options.jobs);
    TraceRow row;
    row.n = out.trace.steps[i];
    if (i < out.trace.ps_error.size()) row.ps_error = out.trace.ps_error[i];
    row.expected_cost = cost.estimate;
    row.cost_std_error = cost.std_error;
    out.rows.push_back(row);
  }
}

}  // namespace

ExperimentOutput run_experiment(const StockMarketConfig& cfg,
                                const SensitivitySchedule& schedule,
                                const ExperimentOptions& options) {
  ControlInstance inst = build_stock_instance(cfg, schedule);

  ExperimentOutput out;
  out.schedule_name = schedule.name;
  out.seed = cfg.seed;
  out.config_hash = hex64(fnv1a64(describe_stock_config(cfg, schedule)));

  const ConstantsBundle bundle = inst.constants();
  out.condition = check_psc_condition(bundle);

  // Reference policy
  std::optional<Matrix> reference;
  switch (options.reference) {
    case ReferenceSource::Supplied:
      reference = options.supplied_reference;
      break;
    case ReferenceSource::None:
      break;
    case ReferenceSource::Auto: {
      bool attempt = true;
      if (options.regime == StockRegime::Unstable) {
        const RearrangementGate gate = propagation_rearrangement_gate(bundle);
        if (!gate.compatible) {
          attempt = false;
          out.diverged = true;
          out.notes.push_back(
              "reference omitted: propagation-weighted sensitivity sum " +
              format_number(gate.sum) + " is in the worst half between the ascending (" +
              format_number(gate.best) + ") and descending (" + format_number(gate.worst) +
              ") rearrangements; the schedule lacks the backward-decaying shape");
        }
      }
      if (attempt) {
        InnerSolveOptions inner;
        inner.oracle = GradOracle::Moments;
        inner.tol = 1e-7;
        inner.budget = 4000;
        inner.seed = SeedPair{cfg.seed ^ 0x5151515151515151ULL, 0};
        Policy start = inst.policy;
        start.params = feasible_center(start);
        const FixedPointResult fp = rrm_run(inst, start, 60, 1e-8, inner);
        if (fp.converged) {
          reference = fp.m_star.params;
        } else {
          out.diverged = true;
          out.notes.push_back("reference omitted: fixed-point iteration did not settle (residual " +
                              format_number(fp.residual) + ")");
        }
      }
      break;
    }
  }
  out.reference_available = reference.has_value();
  if (reference) out.reference = *reference;

  RsgdConfig rsgd;
  if (cfg.eta_phi1 > 0.0) {
    rsgd.plan.kind = StepPlanKind::Diminishing;
    rsgd.plan.phi1 = cfg.eta_phi1;
    rsgd.plan.phi2 = cfg.eta_phi2;
  } else {
    rsgd.plan = StepSizePlan::constant(cfg.eta);
  }
  rsgd.plan.valid = false;  // practical step sizes, not a Theorem-1 plan
  rsgd.N = cfg.N;
  rsgd.log_every = options.log_every;
  rsgd.seed = SeedPair{cfg.seed, 1};

  // deterministic feasible initial policy drawn from the run seed
  {
    Rng init(SeedPair{cfg.seed, 0}, Stream::Init);
    Matrix m0(cfg.L, cfg.L);
    for (int i = 0; i < cfg.L; ++i)
      for (int j = 0; j < cfg.L; ++j) m0(i, j) = init.uniform01();
    rsgd.M0 = project_params(m0, inst.policy.set);
  }

  out.trace = rsgd_run(inst, rsgd, reference);
  if (out.trace.diverged) {
    out.diverged = true;
    out.notes.push_back("rsgd divergence flag at iteration " +
                        std::to_string(out.trace.diverged_at));
  }

  evaluate_costs(inst, cfg, options, out);
  return out;
}

std::string ExperimentOutput::metadata() const {
  KeyValueWriter kv;
  kv.add("schedule", schedule_name);
  kv.add("seed", static_cast<long>(seed));
  kv.add("config_hash", config_hash);
  kv.add("rows", static_cast<long>(rows.size()));
  kv.add("diverged", diverged);
  kv.add("reference_available", reference_available);
  kv.add("condition_holds", condition.holds);
  kv.add("condition_lhs", condition.lhs);
  kv.add("condition_rhs_mu_tilde", condition.rhs);
  kv.add("condition_margin", condition.margin);
  kv.add("contraction_ratio", condition.contraction_ratio);
  kv.add("at_boundary", condition.at_boundary);
  for (std::size_t i = 0; i < condition.notes.size(); ++i)
    kv.add("condition_note_" + std::to_string(i), condition.notes[i]);
  for (std::size_t i = 0; i < notes.size(); ++i) kv.add("note_" + std::to_string(i), notes[i]);
  kv.add("max_noise_recovery_error", trace.max_noise_recovery_error);
  return kv.str();
}

}  // namespace perfctl
