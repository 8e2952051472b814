#pragma once

#include "perfctl/cost.hpp"

namespace perfctl {

enum class ExpectationMethod { MonteCarlo, Enumeration, MomentPropagation };

//! Expected total cost C_T(M; M') with the perturbation distributions frozen
//! at the deploy policy M'. std_error is 0 for exact methods.
struct ShiftedExpectation {
  Scalar estimate = 0.0;
  Scalar std_error = 0.0;
  ExpectationMethod method = ExpectationMethod::MonteCarlo;
  long n_samples = 0;
};

//! Monte-Carlo estimate over n_samples rollouts acting with `policy` while
//! Delta_t ~ D_t(deploy). Sample k draws from trajectory index k, so results
//! are independent of the number of worker threads.
ShiftedExpectation expected_cost_mc(const SystemConfig& config, const CostModel& model,
                                    const PerturbationMap& map, const NoiseModel& noise,
                                    const Policy& policy, const Policy& deploy, const Vector& x0,
                                    long n_samples, SeedPair seed, int jobs = 1);

//! Exact expectation by enumerating every joint realization sequence.
//! Requires finite supports and (|noise| * |Delta|)^T <= 1e6.
ShiftedExpectation expected_cost_exact(const SystemConfig& config, const CostModel& model,
                                       const PerturbationMap& map, const NoiseModel& noise,
                                       const Policy& policy, const Policy& deploy,
                                       const Vector& x0);

//! Exact gradient of C_T(M; M') w.r.t. the full policy matrix, by the same
//! enumeration (probability-weighted grad_total).
Matrix exact_total_gradient(const SystemConfig& config, const CostModel& model,
                            const PerturbationMap& map, const NoiseModel& noise,
                            const Policy& policy, const Policy& deploy, const Vector& x0);

//! Number of enumeration branches, or -1 when the supports are not finite.
long enumeration_branches(const PerturbationMap& map, const NoiseModel& noise, int T);

//! Exact C_T(M; M') for quadratic-form costs via second-moment propagation
//! of the augmented state [x; window]; O(T) rather than exponential in T.
Scalar expected_cost_moments(const SystemConfig& config, const CostModel& model,
                             const PerturbationMap& map, const NoiseModel& noise,
                             const Policy& policy, const Policy& deploy, const Vector& x0);

//! Exact gradient of expected_cost_moments w.r.t. the full policy matrix,
//! computed by the adjoint of the moment recursion.
Matrix expected_cost_moments_gradient(const SystemConfig& config, const CostModel& model,
                                      const PerturbationMap& map, const NoiseModel& noise,
                                      const Policy& policy, const Policy& deploy,
                                      const Vector& x0);

}  // namespace perfctl
