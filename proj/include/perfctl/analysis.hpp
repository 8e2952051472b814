#pragma once

#include <string>
#include <vector>

#include "perfctl/system.hpp"

namespace perfctl {

enum class RegimeHint { Unknown, AlmostSurelyStable, AlmostSurelyUnstable };

//! Declared per-step sensitivities eps_t and support bounds xi_t, with an
//! optional stability regime annotation (zeta < 1 for the almost surely
//! strongly stable case, zeta_tilde > 1 for the almost surely unstable one).
struct SensitivityProfile {
  std::vector<Scalar> eps;
  std::vector<Scalar> xi;
  RegimeHint regime = RegimeHint::Unknown;
  Scalar zeta = 0.0;

  void validate(int T, Scalar gamma, Scalar kappa) const;
};

//! Every closed-form constant of the analysis: alpha/beta schedules, c1..c5,
//! the per-stage smoothness weights lambda_t, sensitivity-propagation weights
//! nu_t, gradient-variance constants vartheta_t, and the strong-convexity
//! moduli mu_tilde / mu_bar.
struct ConstantsBundle {
  int T = 0;
  int H = 0;
  Scalar mu = 0.0, sigma_s = 0.0, G = 0.0;
  Scalar m_bar = 0.0;
  Scalar x0_bound = 0.0;
  Scalar gamma = 0.0, kappa = 0.0, W = 0.0, sigma2 = 0.0, norm_B = 0.0;
  std::vector<Scalar> eps, xi;
  std::vector<Scalar> alpha, beta;    // t = 0..T
  Scalar c1 = 0, c2 = 0, c3 = 0, c4 = 0, c5 = 0;
  std::vector<Scalar> lambda;         // t = 1..T (index 0 unused)
  std::vector<Scalar> nu;             // t = 1..T (index 0 unused)
  std::vector<Scalar> vartheta;       // t = 1..T (index 0 unused)
  Scalar mu_tilde = 0.0;
  Scalar mu_bar = 0.0;
  Scalar condition_lhs = 0.0;         // sum_t eps_t sum_{i>t} nu_i
  Scalar sum_lambda = 0.0;

  Scalar margin() const { return mu_tilde - condition_lhs; }
};

ConstantsBundle compute_constants(const SystemConfig& config, Scalar mu, Scalar sigma_s,
                                  Scalar G, const SensitivityProfile& profile, Scalar m_bar);

Scalar mu_tilde(int T, int H, Scalar mu, Scalar sigma2, Scalar gamma, Scalar kappa);
Scalar mu_bar(Scalar mu, Scalar sigma2, Scalar gamma, Scalar kappa);

//! Existence condition sum_t (eps_t sum_{i>t} nu_i) < mu_tilde.
struct ConditionReport {
  bool holds = false;
  Scalar lhs = 0.0;
  Scalar rhs = 0.0;
  Scalar margin = 0.0;
  Scalar contraction_ratio = 0.0;
  std::vector<Scalar> per_step;  // eps_t * sum_{i>t} nu_i
  bool at_boundary = false;      // margin within 1e-12 of zero
  std::vector<std::string> notes;
};

ConditionReport check_psc_condition(const ConstantsBundle& bundle);

//! Smallest n with ||M_n - M^PS|| <= rho guaranteed by the fixed-point
//! contraction; throws when the condition fails.
int rrm_iteration_bound(const ConditionReport& report, Scalar initial_gap, Scalar rho);

struct ThresholdReport {
  Scalar threshold = 0.0;
  Scalar observed = 0.0;  // sum of eps_t
  bool satisfied = false;
};

//! Stable case: sum eps_t < phi (1 - H/T) mu_bar with
//! phi = ((c1 + c2/(1-zeta)) (x0 + c3/(1-zeta)))^{-1}.
ThresholdReport stable_case_threshold(const ConstantsBundle& bundle, Scalar zeta);

//! Unstable case necessary bound eps_t < phibar (T-H+1) mu_bar / (zeta~^{T-t} - 1).
Scalar unstable_case_requirement(const ConstantsBundle& bundle, Scalar zeta_tilde, int t);
std::vector<Scalar> unstable_case_schedule(const ConstantsBundle& bundle, Scalar zeta_tilde);

enum class StepPlanKind { Diminishing, Constant, Custom };

struct StepSizePlan {
  StepPlanKind kind = StepPlanKind::Constant;
  Scalar phi1 = 0.0, phi2 = 1.0;  // Diminishing: eta_n = phi1 / (n + phi2)
  Scalar eta = 0.0;               // Constant
  std::vector<Scalar> schedule;   // Custom
  bool valid = false;
  Scalar phi3 = 0.0;              // Diminishing fluctuation constant
  std::vector<std::string> violated;

  static StepSizePlan constant(Scalar eta);
  static StepSizePlan custom(std::vector<Scalar> etas);
  Scalar eta_at(long n) const;
};

//! Validates (phi1, phi2) against the two diminishing-step conditions and
//! fills phi3 = 4 phi1 T sum vartheta_t^2 / margin.
StepSizePlan plan_diminishing_steps(const ConstantsBundle& bundle, Scalar phi1, Scalar phi2);

//! General-step validity: sup eta_n below the margin-derived cap and the
//! consecutive-ratio condition over the supplied finite schedule.
StepSizePlan validate_step_sizes_general(const ConstantsBundle& bundle,
                                         const std::vector<Scalar>& schedule);

//! Searches phi2 over {10^0, ..., 10^max_exponent} (phi1 maximal under the
//! cap) for a pair satisfying both conditions.
StepSizePlan find_valid_plan(const ConstantsBundle& bundle, int max_exponent = 6);

//! exp(-sum_{n=1}^{N} (phi1/n) margin) gap0^2 + phi3 / N.
Scalar theorem1_error_bound(const ConstantsBundle& bundle, const StepSizePlan& plan,
                            Scalar initial_gap_sq, long N);

}  // namespace perfctl
