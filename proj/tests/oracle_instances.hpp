#pragma once

// Shared factories for small certified-stable instances with finite noise
// and perturbation supports, so expectations can be enumerated exactly.

#include "perfctl/solvers.hpp"

namespace perfctl::testing {

struct OracleSpec {
  int d = 1;           // dx = du
  int H = 1;
  int T = 3;
  Scalar a = 0.5;      // A = a I, K = 0, certified with kappa = 1, gamma = 1-|a|
  Scalar b = 1.0;      // B = b I
  Scalar q = 1.0;      // Qx = q I
  Scalar r = 1.0;      // Ru = r I
  Scalar amplitude = 0.2;   // scaled-factor amplitude (eps scale)
  Scalar u_scale = 0.3;     // factor atom magnitude
  Scalar m_radius = 1.0;
  Scalar x0_fill = 0.3;
};

inline ControlInstance make_oracle_instance(const OracleSpec& spec) {
  ControlInstance inst;
  const int d = spec.d;
  inst.system.dx = d;
  inst.system.du = d;
  inst.system.A = spec.a * Matrix::Identity(d, d);
  inst.system.B = spec.b * Matrix::Identity(d, d);
  inst.system.K = Matrix::Zero(d, d);
  inst.system.T = spec.T;
  inst.system.H = spec.H;
  inst.system.kappa = 1.0;
  inst.system.gamma = 1.0 - std::abs(spec.a);

  // hypercube-corner noise: covariance I, norm sqrt(d)
  std::vector<Vector> atoms;
  const int corners = 1 << d;
  for (int mask = 0; mask < corners; ++mask) {
    Vector v(d);
    for (int i = 0; i < d; ++i) v(i) = (mask >> i) & 1 ? 1.0 : -1.0;
    atoms.push_back(v);
  }
  inst.noise = NoiseModel::discrete(atoms, std::vector<Scalar>(corners, 1.0 / corners));
  inst.system.W = inst.noise.w_bound();
  inst.system.sigma2 = inst.noise.sigma2();

  Matrix u0 = spec.u_scale * Matrix::Identity(d, d);
  if (d > 1) u0(0, d - 1) = 0.5 * spec.u_scale;
  Matrix dir = Matrix::Zero(d, spec.H * d);
  dir(0, 0) = 1.0;
  inst.map = PerturbationMap::scaled_factor(
      spec.T, std::vector<Scalar>(spec.T, spec.amplitude), dir, {u0, -u0}, {0.5, 0.5});

  inst.cost = CostModel::quadratic(spec.q * Matrix::Identity(d, d),
                                   spec.r * Matrix::Identity(d, d));

  inst.x0 = Vector::Constant(d, spec.x0_fill);
  inst.system.x0_bound = inst.x0.norm();

  inst.policy =
      Policy::dense(Matrix::Zero(d, spec.H * d), spec.H, FeasibleSet::ball(spec.m_radius));
  return inst;
}

//! Rescales the factor amplitude so that the sensitivity-propagation sum
//! sits at `target_ratio` times mu_tilde (the nu weights barely move at
//! these magnitudes, so one correction pass suffices).
inline ControlInstance tuned_oracle_instance(OracleSpec spec, Scalar target_ratio) {
  spec.amplitude = 1e-9;
  ControlInstance probe = make_oracle_instance(spec);
  ConstantsBundle bundle = probe.constants();
  const Scalar per_unit = bundle.condition_lhs / spec.amplitude;
  spec.amplitude = target_ratio * bundle.mu_tilde / per_unit;
  ControlInstance tuned = make_oracle_instance(spec);
  bundle = tuned.constants();
  const Scalar ratio = bundle.condition_lhs / bundle.mu_tilde;
  spec.amplitude *= target_ratio / ratio;
  return make_oracle_instance(spec);
}

inline Policy random_feasible(const ControlInstance& inst, Rng& rng) {
  Policy p = inst.policy;
  Matrix m(p.params.rows(), p.params.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.normal();
  p.params = project_params(0.7 * p.set.value * m / std::max(1e-12, m.norm()) , p.set);
  return p;
}

}  // namespace perfctl::testing
