#include "perfctl/dynamics.hpp"

#include <stdexcept>

namespace perfctl {

Vector disturbance_window(const std::vector<Vector>& noises, int t, int H, int dx) {
  if (t < 0) throw std::invalid_argument("step index must be >= 0");
  Vector window = Vector::Zero(static_cast<Eigen::Index>(H) * dx);
  for (int i = 1; i <= H; ++i) {
    const int idx = t - i;
    if (idx < 0) continue;
    if (idx >= static_cast<int>(noises.size())) throw std::invalid_argument("missing noise entry");
    if (noises[idx].size() != dx) throw std::invalid_argument("noise dimension mismatch");
    window.segment(static_cast<Eigen::Index>(i - 1) * dx, dx) = noises[idx];
  }
  return window;
}

Vector control_action(const Matrix& m_full, const Matrix& K, const Vector& x,
                      const Vector& window) {
  if (m_full.cols() != window.size()) throw std::invalid_argument("window length mismatch");
  return -K * x + m_full * window;
}

Vector step(const Matrix& a_t, const Matrix& B, const Vector& x, const Vector& u,
            const Vector& w) {
  return a_t * x + B * u + w;
}

TrajectoryRecord simulate_trajectory_shifted(const SystemConfig& config, const Policy& policy,
                                             const Policy& deploy, const PerturbationMap& map,
                                             const NoiseModel& noise, const Vector& x0,
                                             SeedPair seed) {
  if (x0.size() != config.dx) throw std::invalid_argument("x0 dimension mismatch");
  if (x0.norm() > config.x0_bound + 1e-12)
    throw std::invalid_argument("x0 violates the configured norm bound");

  Rng noise_rng(seed, Stream::Noise);
  Rng pert_rng(seed, Stream::Perturbation);

  TrajectoryRecord rec;
  rec.seed = seed;
  rec.states.reserve(config.T + 1);
  rec.actions.reserve(config.T);
  rec.noises.reserve(config.T);
  rec.perturbations.reserve(config.T);
  rec.states.push_back(x0);

  const Matrix m_full = policy.full();
  Vector x = x0;
  for (int t = 0; t < config.T; ++t) {
    const Matrix delta = map.sample(t, deploy, pert_rng);
    const Matrix a_t = config.A + delta;
    const Vector window = disturbance_window(rec.noises, t, config.H, config.dx);
    const Vector u = control_action(m_full, config.K, x, window);
    const Vector w = noise.sample(noise_rng);
    x = step(a_t, config.B, x, u, w);
    rec.perturbations.push_back(delta);
    rec.actions.push_back(u);
    rec.noises.push_back(w);
    rec.states.push_back(x);
  }
  rec.stage_costs.assign(config.T + 1, 0.0);
  return rec;
}

TrajectoryRecord simulate_trajectory(const SystemConfig& config, const Policy& policy,
                                     const PerturbationMap& map, const NoiseModel& noise,
                                     const Vector& x0, SeedPair seed) {
  return simulate_trajectory_shifted(config, policy, policy, map, noise, x0, seed);
}

std::vector<Vector> replay_states(const SystemConfig& config, const Policy& policy,
                                  const std::vector<Matrix>& perturbations,
                                  const std::vector<Vector>& noises, const Vector& x0) {
  const Matrix m_full = policy.full();
  std::vector<Vector> states;
  states.reserve(config.T + 1);
  states.push_back(x0);
  std::vector<Vector> past;
  past.reserve(config.T);
  Vector x = x0;
  for (int t = 0; t < config.T; ++t) {
    const Vector window = disturbance_window(past, t, config.H, config.dx);
    const Vector u = control_action(m_full, config.K, x, window);
    x = step(config.A + perturbations[t], config.B, x, u, noises[t]);
    past.push_back(noises[t]);
    states.push_back(x);
  }
  return states;
}

Vector closed_form_state(const SystemConfig& config, const Policy& policy,
                         const std::vector<Matrix>& perturbations,
                         const std::vector<Vector>& noises, const Vector& x0, int t) {
  if (t < 1 || t > config.T) throw std::invalid_argument("t must be in [1, T]");
  if (static_cast<int>(perturbations.size()) < t || static_cast<int>(noises.size()) < t)
    throw std::invalid_argument("missing realizations");

  const Matrix a_tilde = config.a_tilde();
  const Matrix m_full = policy.full();

  // Ordered product (A~ + Delta_{t-1}) ... (A~ + Delta_{from}); empty range is I.
  auto prod = [&](int from, int to) {
    Matrix p = Matrix::Identity(config.dx, config.dx);
    for (int j = to; j >= from; --j) p = p * (a_tilde + perturbations[j]);
    return p;
  };

  Vector x = prod(0, t - 1) * x0;
  for (int i = 0; i < t; ++i) {
    const Matrix chain = prod(i + 1, t - 1);
    const Vector window = disturbance_window(noises, i, config.H, config.dx);
    x += chain * (config.B * (m_full * window));
    x += chain * noises[i];
  }
  return x;
}

}  // namespace perfctl
