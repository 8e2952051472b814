#include "perfctl/analysis.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace perfctl {

void SensitivityProfile::validate(int T, Scalar gamma, Scalar kappa) const {
  if (static_cast<int>(eps.size()) != T || static_cast<int>(xi.size()) != T)
    throw std::invalid_argument("profile schedules must have length T");
  for (Scalar e : eps)
    if (e < 0.0 || !std::isfinite(e)) throw std::invalid_argument("eps must be finite and >= 0");
  for (Scalar x : xi)
    if (x < 0.0 || !std::isfinite(x)) throw std::invalid_argument("xi must be finite and >= 0");
  if (regime == RegimeHint::AlmostSurelyStable) {
    if (!(zeta > 0.0 && zeta < 1.0)) throw std::invalid_argument("stable regime needs zeta in (0,1)");
    for (Scalar x : xi)
      if (1.0 - gamma + kappa * kappa * x > zeta + 1e-12)
        throw std::invalid_argument("xi schedule exceeds the declared stable zeta");
  }
  if (regime == RegimeHint::AlmostSurelyUnstable) {
    if (!(zeta > 1.0)) throw std::invalid_argument("unstable regime needs zeta_tilde > 1");
    for (Scalar x : xi)
      if (zeta > 1.0 - gamma + kappa * kappa * x + 1e-12)
        throw std::invalid_argument("zeta_tilde is not a lower bound for 1-gamma+kappa^2 xi_t");
  }
}

Scalar mu_tilde(int T, int H, Scalar mu, Scalar sigma2, Scalar gamma, Scalar kappa) {
  if (H >= T) throw std::invalid_argument("H must be < T");
  return static_cast<Scalar>(T - H + 1) * mu_bar(mu, sigma2, gamma, kappa);
}

Scalar mu_bar(Scalar mu, Scalar sigma2, Scalar gamma, Scalar kappa) {
  const Scalar k10 = std::pow(kappa, 10);
  return std::min(mu * sigma2 / 2.0, mu * sigma2 * gamma * gamma / (64.0 * k10));
}

ConstantsBundle compute_constants(const SystemConfig& config, Scalar mu, Scalar sigma_s,
                                  Scalar G, const SensitivityProfile& profile, Scalar m_bar) {
  if (!(config.gamma > 0.0 && config.gamma < 1.0))
    throw std::invalid_argument("gamma must be in (0,1)");
  if (sigma_s <= 0.0 || G <= 0.0) throw std::invalid_argument("cost constants must be positive");
  profile.validate(config.T, config.gamma, config.kappa);

  ConstantsBundle b;
  b.T = config.T;
  b.H = config.H;
  b.mu = mu;
  b.sigma_s = sigma_s;
  b.G = G;
  b.m_bar = m_bar;
  b.x0_bound = config.x0_bound;
  b.gamma = config.gamma;
  b.kappa = config.kappa;
  b.W = config.W;
  b.sigma2 = config.sigma2;
  b.norm_B = spectral_norm(config.B);
  b.eps = profile.eps;
  b.xi = profile.xi;

  alpha_beta_schedules(config.gamma, config.kappa, profile.xi, config.T, b.alpha, b.beta);

  const Scalar kap = config.kappa;
  const Scalar k23 = kap * kap + kap * kap * kap;
  const Scalar k45 = std::pow(kap, 4) + std::pow(kap, 5);
  const Scalar h32 = std::pow(static_cast<Scalar>(config.H), 1.5);
  const Scalar inv1g = 1.0 / (1.0 - config.gamma);
  const Scalar hw = static_cast<Scalar>(config.H) * config.W;

  b.c1 = config.dx * sigma_s * h32 * config.W * (1.0 + k23 * b.norm_B) * k23 * inv1g;
  b.c2 = config.dx * h32 * config.W * G * inv1g * k45 * b.norm_B;
  b.c3 = (static_cast<Scalar>(config.H) * m_bar * b.norm_B + 1.0) * config.W;
  b.c4 = hw * (1.0 - config.gamma);
  b.c5 = hw * (1.0 - config.gamma) / k23;

  b.lambda.assign(config.T + 1, 0.0);
  b.nu.assign(config.T + 1, 0.0);
  b.vartheta.assign(config.T + 1, 0.0);
  const Scalar k3 = kap * kap * kap;
  for (int t = 1; t <= config.T; ++t) {
    const Scalar at = b.alpha[t];
    const Scalar bt = b.beta[t];
    b.lambda[t] = b.c1 * (b.c4 * bt + b.c5);
    b.nu[t] = (b.c1 + b.c2 * bt) * (config.x0_bound * at + b.c3 * bt);
    b.vartheta[t] = k3 * G * ((hw + kap * kap) * kap * b.norm_B * bt + 1.0) *
                        (config.x0_bound * at + b.c3 * bt) +
                    G * hw * m_bar * (k3 * bt + 1.0);
  }

  b.mu_bar = perfctl::mu_bar(mu, config.sigma2, config.gamma, config.kappa);
  b.mu_tilde = static_cast<Scalar>(config.T - config.H + 1) * b.mu_bar;

  b.condition_lhs = 0.0;
  Scalar tail = 0.0;
  for (int t = config.T - 1; t >= 0; --t) {
    tail += b.nu[t + 1];
    b.condition_lhs += b.eps[t] * tail;
  }
  b.sum_lambda = 0.0;
  for (int t = 1; t <= config.T; ++t) b.sum_lambda += b.lambda[t];
  return b;
}

ConditionReport check_psc_condition(const ConstantsBundle& bundle) {
  ConditionReport rep;
  rep.lhs = bundle.condition_lhs;
  rep.rhs = bundle.mu_tilde;
  rep.margin = rep.rhs - rep.lhs;
  rep.contraction_ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs
                                        : std::numeric_limits<Scalar>::infinity();
  rep.per_step.assign(bundle.T, 0.0);
  Scalar tail = 0.0;
  for (int t = bundle.T - 1; t >= 0; --t) {
    tail += bundle.nu[t + 1];
    rep.per_step[t] = bundle.eps[t] * tail;
  }
  rep.at_boundary = std::abs(rep.margin) <= 1e-12;
  rep.holds = rep.margin > 0.0 && !rep.at_boundary;  // strict inequality
  if (rep.at_boundary) rep.notes.push_back("numerically at boundary");
  if (bundle.mu == 0.0) rep.notes.push_back("cost strong convexity mu is zero (A4 violated)");
  if (bundle.sigma2 == 0.0) rep.notes.push_back("noise covariance floor is zero (A1 violated)");
  return rep;
}

int rrm_iteration_bound(const ConditionReport& report, Scalar initial_gap, Scalar rho) {
  if (!report.holds) throw std::invalid_argument("existence condition fails: no bound");
  if (!(initial_gap > 0.0) || !(rho > 0.0) || rho >= initial_gap)
    throw std::invalid_argument("need 0 < rho < initial_gap");
  const Scalar value =
      std::log(initial_gap / rho) / (1.0 - report.contraction_ratio);
  return static_cast<int>(std::ceil(value - 1e-9));
}

ThresholdReport stable_case_threshold(const ConstantsBundle& bundle, Scalar zeta) {
  if (!(zeta > 0.0 && zeta < 1.0)) throw std::invalid_argument("zeta must be in (0,1)");
  const Scalar inv = 1.0 / (1.0 - zeta);
  const Scalar phi =
      1.0 / ((bundle.c1 + bundle.c2 * inv) * (bundle.x0_bound + bundle.c3 * inv));
  ThresholdReport rep;
  rep.threshold =
      phi * (1.0 - static_cast<Scalar>(bundle.H) / static_cast<Scalar>(bundle.T)) * bundle.mu_bar;
  rep.observed = 0.0;
  for (Scalar e : bundle.eps) rep.observed += e;
  rep.satisfied = rep.observed < rep.threshold;
  return rep;
}

Scalar unstable_case_requirement(const ConstantsBundle& bundle, Scalar zeta_tilde, int t) {
  if (!(zeta_tilde > 1.0)) throw std::invalid_argument("zeta_tilde must be > 1");
  if (t < 0 || t >= bundle.T) throw std::invalid_argument("t out of range");
  const Scalar phibar =
      (zeta_tilde - 1.0) /
      (bundle.c1 * bundle.x0_bound +
       (bundle.c1 * bundle.c3 + bundle.c2 * bundle.c3 + bundle.c3 * bundle.x0_bound) / zeta_tilde);
  const Scalar denom = std::pow(zeta_tilde, bundle.T - t) - 1.0;
  return phibar * static_cast<Scalar>(bundle.T - bundle.H + 1) * bundle.mu_bar / denom;
}

std::vector<Scalar> unstable_case_schedule(const ConstantsBundle& bundle, Scalar zeta_tilde) {
  std::vector<Scalar> out(bundle.T);
  for (int t = 0; t < bundle.T; ++t) out[t] = unstable_case_requirement(bundle, zeta_tilde, t);
  return out;
}

StepSizePlan StepSizePlan::constant(Scalar eta) {
  StepSizePlan p;
  p.kind = StepPlanKind::Constant;
  p.eta = eta;
  return p;
}

StepSizePlan StepSizePlan::custom(std::vector<Scalar> etas) {
  StepSizePlan p;
  p.kind = StepPlanKind::Custom;
  p.schedule = std::move(etas);
  return p;
}

Scalar StepSizePlan::eta_at(long n) const {
  switch (kind) {
    case StepPlanKind::Diminishing:
      return phi1 / (static_cast<Scalar>(n) + phi2);
    case StepPlanKind::Constant:
      return eta;
    case StepPlanKind::Custom:
      if (n < 0 || n >= static_cast<long>(schedule.size()))
        throw std::out_of_range("custom schedule exhausted");
      return schedule[static_cast<std::size_t>(n)];
  }
  throw std::logic_error("unknown plan kind");
}

StepSizePlan plan_diminishing_steps(const ConstantsBundle& bundle, Scalar phi1, Scalar phi2) {
  if (phi2 < 1.0) throw std::invalid_argument("phi2 must be >= 1");
  if (!(phi1 > 0.0)) throw std::invalid_argument("phi1 must be > 0");
  StepSizePlan plan;
  plan.kind = StepPlanKind::Diminishing;
  plan.phi1 = phi1;
  plan.phi2 = phi2;

  const Scalar margin = bundle.margin();
  if (!(margin > 0.0)) {
    plan.valid = false;
    plan.violated.push_back("existence condition (14) fails: mu_tilde margin <= 0");
    return plan;
  }
  const Scalar denom = bundle.sum_lambda + bundle.condition_lhs;
  const Scalar cap = std::min(margin / (2.0 * denom * denom), 1.0 / margin);
  if (phi1 / phi2 > cap)
    plan.violated.push_back("condition (17): phi1/phi2 exceeds the step-size cap");
  if (phi1 / (1.0 + 1.0 / phi2) < 2.0 / margin)
    plan.violated.push_back("condition (18): phi1/(1+1/phi2) below 2/margin");
  plan.valid = plan.violated.empty();

  Scalar sum_theta_sq = 0.0;
  for (int t = 1; t <= bundle.T; ++t) sum_theta_sq += bundle.vartheta[t] * bundle.vartheta[t];
  plan.phi3 = 4.0 * phi1 * static_cast<Scalar>(bundle.T) * sum_theta_sq / margin;
  return plan;
}

StepSizePlan validate_step_sizes_general(const ConstantsBundle& bundle,
                                         const std::vector<Scalar>& schedule) {
  if (schedule.empty()) throw std::invalid_argument("empty schedule");
  StepSizePlan plan = StepSizePlan::custom(schedule);

  const Scalar margin = bundle.margin();
  if (!(margin > 0.0)) {
    plan.valid = false;
    plan.violated.push_back("existence condition (14) fails: mu_tilde margin <= 0");
    return plan;
  }
  const Scalar denom = bundle.sum_lambda + bundle.condition_lhs;
  const Scalar sup_cap = std::min(margin / (2.0 * denom * denom), 2.0 / margin);
  for (Scalar eta : schedule) {
    if (!(eta >= 0.0)) {
      plan.violated.push_back("negative step size");
      break;
    }
    if (eta > sup_cap) {
      plan.violated.push_back("sup condition: eta_n exceeds min{margin/(2(sum lambda + S)^2), 2/margin}");
      break;
    }
  }
  for (std::size_t n = 0; n + 1 < schedule.size(); ++n) {
    if (schedule[n + 1] <= 0.0) continue;
    if (schedule[n] / schedule[n + 1] > 1.0 + 0.5 * margin * schedule[n + 1] + 1e-15) {
      plan.violated.push_back("ratio condition: eta_n/eta_{n+1} > 1 + margin eta_{n+1}/2 at n=" +
                              std::to_string(n));
      break;
    }
  }
  plan.valid = plan.violated.empty();
  return plan;
}

StepSizePlan find_valid_plan(const ConstantsBundle& bundle, int max_exponent) {
  const Scalar margin = bundle.margin();
  if (!(margin > 0.0)) throw std::invalid_argument("existence condition fails");
  const Scalar denom = bundle.sum_lambda + bundle.condition_lhs;
  const Scalar cap = std::min(margin / (2.0 * denom * denom), 1.0 / margin);
  Scalar phi2 = 1.0;
  for (int e = 0; e <= max_exponent; ++e, phi2 *= 10.0) {
    const Scalar phi1 = cap * phi2;
    StepSizePlan plan = plan_diminishing_steps(bundle, phi1, phi2);
    if (plan.valid) return plan;
  }
  StepSizePlan plan = plan_diminishing_steps(bundle, cap, 1.0);
  plan.valid = false;
  plan.violated.push_back("no valid (phi1, phi2) found up to phi2 = 10^" +
                          std::to_string(max_exponent));
  return plan;
}

Scalar theorem1_error_bound(const ConstantsBundle& bundle, const StepSizePlan& plan,
                            Scalar initial_gap_sq, long N) {
  if (plan.kind != StepPlanKind::Diminishing || !plan.valid)
    throw std::invalid_argument("theorem bound requires a valid diminishing plan");
  if (N < 1) throw std::invalid_argument("N must be >= 1");
  const Scalar margin = bundle.margin();
  Scalar harmonic = 0.0;
  for (long n = 1; n <= N; ++n) harmonic += 1.0 / static_cast<Scalar>(n);
  return std::exp(-plan.phi1 * margin * harmonic) * initial_gap_sq +
         plan.phi3 / static_cast<Scalar>(N);
}

}  // namespace perfctl
