#pragma once

#include <functional>

#include "perfctl/dynamics.hpp"

namespace perfctl {

enum class CostKind { Quadratic, StockRisk };

//! Convex per-stage cost c_t(x, u). Quadratic is x^T Qx x + u^T Ru u with
//! positive-definite weights; StockRisk is the projected quadratic
//! ||head_L(x)||^2 + ||head_L(u)||^2 whose joint strong-convexity modulus is
//! zero (reported honestly, not asserted away).
struct CostModel {
  CostKind kind = CostKind::Quadratic;
  Matrix Qx;  // dx x dx
  Matrix Ru;  // du x du

  static CostModel quadratic(const Matrix& Qx, const Matrix& Ru);
  static CostModel stock_risk(int L);

  Scalar mu() const;       // strong convexity modulus of c_t over (x, u)
  Scalar sigma_s() const;  // smoothness constant
  Scalar G() const;        // gradient growth factor in A6

  Scalar stage_cost(int t, const Vector& x, const Vector& u) const;
  std::pair<Vector, Vector> stage_grads(int t, const Vector& x, const Vector& u) const;
};

//! Action used by the terminal stage cost c_T; it follows the policy formula
//! but never drives the dynamics.
Vector final_action(const SystemConfig& config, const Policy& policy,
                    const TrajectoryRecord& rec);

//! Fills rec.stage_costs with c_0..c_T for the recorded rollout.
void fill_stage_costs(TrajectoryRecord& rec, const SystemConfig& config, const CostModel& model,
                      const Policy& policy);

//! J_T = sum_{t=0}^{T} c_t for the policy replayed against fixed realizations.
Scalar total_cost_fixed(const SystemConfig& config, const CostModel& model, const Policy& policy,
                        const std::vector<Matrix>& perturbations,
                        const std::vector<Vector>& noises, const Vector& x0);

//! Gradient of c_t w.r.t. the full policy matrix at fixed realizations:
//! transition-chain term through grad_x, the -K-propagated grad_u term, and
//! the direct grad_u window term. t = 0 returns zero.
Matrix grad_policy_stage(const SystemConfig& config, const CostModel& model,
                         const Policy& policy, const std::vector<Matrix>& perturbations,
                         const std::vector<Vector>& noises, const Vector& x0, int t);

//! Sum of grad_policy_stage over t = 0..T, shaped like the full policy matrix.
Matrix grad_total(const SystemConfig& config, const CostModel& model, const Policy& policy,
                  const std::vector<Matrix>& perturbations, const std::vector<Vector>& noises,
                  const Vector& x0);

//! Entrywise central finite differences (f(M + h E_ij) - f(M - h E_ij)) / 2h.
Matrix fd_gradient(const std::function<Scalar(const Matrix&)>& f, const Matrix& m,
                   Scalar h = 1e-6);

}  // namespace perfctl
