#pragma once

#include <optional>

#include "perfctl/analysis.hpp"
#include "perfctl/expectation.hpp"

namespace perfctl {

//! Everything needed to roll out and optimize one control instance.
struct ControlInstance {
  SystemConfig system;
  CostModel cost;
  PerturbationMap map;
  NoiseModel noise;
  Vector x0;
  Policy policy;  // template: shape, layout, feasible set, initial params

  SensitivityProfile profile(RegimeHint regime = RegimeHint::Unknown, Scalar zeta = 0.0) const;
  ConstantsBundle constants() const;
};

struct RsgdConfig {
  StepSizePlan plan;
  long N = 100;           // logs iterates 0..N; runs N+1 projected updates
  std::optional<Matrix> M0;  // initial params; defaults to the instance policy
  int log_every = 1;
  SeedPair seed;
  int batch = 1;          // trajectories averaged per update; 1 = Algorithm 1
  Scalar divergence_norm = 1e6;
};

struct RunTrace {
  std::vector<long> steps;
  std::vector<Matrix> iterates;       // logged parameter matrices
  std::vector<Scalar> ps_error;       // ||params_n - ref||_F^2; empty without a reference
  std::vector<Scalar> expected_cost;  // filled by the experiments layer
  std::vector<Scalar> cost_std_error;
  std::vector<Scalar> wall_time;      // seconds per logged iterate
  bool diverged = false;
  long diverged_at = -1;
  Scalar max_noise_recovery_error = 0.0;
  bool plan_valid = false;
};

//! Repeated stochastic gradient descent (Algorithm 1): one rollout under the
//! current policy (perturbations drawn from D_t(M_n)), noise recovered from
//! observed transitions, one projected gradient step. Deterministic given
//! the seed pair. Aborts with the divergence flag when the pre-projection
//! iterate norm exceeds divergence_norm or the gradient is non-finite.
RunTrace rsgd_run(const ControlInstance& instance, const RsgdConfig& config,
                  const std::optional<Matrix>& reference_params = std::nullopt);

enum class GradOracle { Auto, Enumeration, Moments, MonteCarlo };

struct InnerSolveOptions {
  GradOracle oracle = GradOracle::Auto;
  long budget = 20000;      // gradient evaluations
  Scalar tol = 1e-9;        // projected-gradient residual target
  long mc_batch = 8;        // Monte-Carlo gradient minibatch
  Scalar mc_eta0 = 0.05;
  SeedPair seed;
};

struct InnerResult {
  Policy policy;
  bool converged = false;
  Scalar residual = 0.0;
  long iterations = 0;
  GradOracle oracle_used = GradOracle::Moments;
};

//! argmin_M C_T(M; M') with the distributions frozen at `deploy`.
InnerResult minimize_shifted(const ControlInstance& instance, const Policy& deploy,
                             const InnerSolveOptions& options);

struct FixedPointResult {
  Policy m_star;
  int iterations = 0;
  Scalar residual = 0.0;
  bool converged = false;
  std::vector<Scalar> gaps;  // ||M_{n+1} - M_n||_F per iteration
  bool inner_flagged = false;
};

//! Repeated risk minimization M_{n+1} = Phi(M_n); stops at ||M_{n+1}-M_n||_F
//! <= tol or max_iters.
FixedPointResult rrm_run(const ControlInstance& instance, const Policy& M0, int max_iters,
                         Scalar tol, InnerSolveOptions inner = {});

//! High-accuracy PSC reference: RRM with near-exact inner solves (tolerance
//! tol/10) from the feasible-set center, run to residual <= tol. Throws when
//! the iteration fails to reach the target.
Policy psc_reference(const ControlInstance& instance, Scalar tol,
                     GradOracle oracle = GradOracle::Auto);

//! Center of the feasible set used to seed reference solves.
Matrix feasible_center(const Policy& policy);

}  // namespace perfctl
