#pragma once

#include <vector>

#include "perfctl/noise.hpp"
#include "perfctl/perturbation.hpp"
#include "perfctl/policy.hpp"
#include "perfctl/rng.hpp"
#include "perfctl/system.hpp"

namespace perfctl {

//! One realized rollout. Replaying (x0, noises, perturbations) through the
//! step operation reproduces `states` exactly; stage_costs is filled by the
//! cost layer (zeros until then).
struct TrajectoryRecord {
  std::vector<Vector> states;         // x_0 .. x_T
  std::vector<Vector> actions;        // u_0 .. u_{T-1}
  std::vector<Vector> noises;         // w_0 .. w_{T-1}
  std::vector<Matrix> perturbations;  // Delta_0 .. Delta_{T-1}
  std::vector<Scalar> stage_costs;    // c_0 .. c_T
  SeedPair seed;
};

//! Stacked window [w_{t-1}; ...; w_{t-H}] with zero blocks for negative
//! indices (w_i = 0 for i < 0).
Vector disturbance_window(const std::vector<Vector>& noises, int t, int H, int dx);

//! u = -K x + M window.
Vector control_action(const Matrix& m_full, const Matrix& K, const Vector& x,
                      const Vector& window);

//! x' = A_t x + B u + w.
Vector step(const Matrix& a_t, const Matrix& B, const Vector& x, const Vector& u,
            const Vector& w);

//! Rolls the system forward for T steps, drawing Delta_t ~ D_t(deploy) and
//! w_t from their dedicated streams. Deterministic given the seed pair.
//! Throws if ||x0|| exceeds the configured bound.
TrajectoryRecord simulate_trajectory(const SystemConfig& config, const Policy& policy,
                                     const PerturbationMap& map, const NoiseModel& noise,
                                     const Vector& x0, SeedPair seed);

//! Distribution-shifted variant: acts with `policy` while Delta_t ~ D_t(deploy).
TrajectoryRecord simulate_trajectory_shifted(const SystemConfig& config, const Policy& policy,
                                             const Policy& deploy, const PerturbationMap& map,
                                             const NoiseModel& noise, const Vector& x0,
                                             SeedPair seed);

//! Replays given realizations through the recursion; returns x_0..x_T.
std::vector<Vector> replay_states(const SystemConfig& config, const Policy& policy,
                                  const std::vector<Matrix>& perturbations,
                                  const std::vector<Vector>& noises, const Vector& x0);

//! Direct evaluation of the Lemma-1 closed form for x_t.
Vector closed_form_state(const SystemConfig& config, const Policy& policy,
                         const std::vector<Matrix>& perturbations,
                         const std::vector<Vector>& noises, const Vector& x0, int t);

}  // namespace perfctl
