#include "perfctl/solvers.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace perfctl {

SensitivityProfile ControlInstance::profile(RegimeHint regime, Scalar zeta) const {
  SensitivityProfile p;
  p.eps = map.eps;
  p.xi = map.xi;
  p.regime = regime;
  p.zeta = zeta;
  return p;
}

ConstantsBundle ControlInstance::constants() const {
  return compute_constants(system, cost.mu(), cost.sigma_s(), cost.G(), profile(),
                           policy.m_bar());
}

RunTrace rsgd_run(const ControlInstance& instance, const RsgdConfig& config,
                  const std::optional<Matrix>& reference_params) {
  const SystemConfig& sys = instance.system;
  Policy current = instance.policy;
  if (config.M0.has_value()) current.params = *config.M0;
  if (!current.is_feasible(1e-9))
    throw std::invalid_argument("initial policy is not feasible");
  if (config.N < 0) throw std::invalid_argument("N must be >= 0");
  const int batch = std::max(1, config.batch);

  RunTrace trace;
  trace.plan_valid = config.plan.valid;
  trace.steps.reserve(config.N / config.log_every + 2);

  using Clock = std::chrono::steady_clock;
  for (long n = 0; n <= config.N; ++n) {
    const auto tic = Clock::now();
    const bool logged = n % config.log_every == 0 || n == config.N;
    if (logged) {
      trace.steps.push_back(n);
      trace.iterates.push_back(current.params);
      if (reference_params.has_value()) {
        const Scalar gap = (current.params - *reference_params).norm();
        trace.ps_error.push_back(gap * gap);
      }
    }

    // Algorithm 1 inner loop: roll out under M_n with Delta_t ~ D_t(M_n),
    // recover the noise from observed transitions, accumulate grad J_T.
    Matrix grad_params = Matrix::Zero(current.params.rows(), current.params.cols());
    for (int j = 0; j < batch; ++j) {
      const SeedPair traj_seed{config.seed.global,
                               config.seed.local +
                                   static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(batch) +
                                   static_cast<std::uint64_t>(j)};
      TrajectoryRecord rec =
          simulate_trajectory(sys, current, instance.map, instance.noise, instance.x0, traj_seed);

      std::vector<Vector> recovered(sys.T);
      for (int t = 0; t < sys.T; ++t) {
        const Matrix a_t = sys.A + rec.perturbations[t];
        recovered[t] = rec.states[t + 1] - a_t * rec.states[t] - sys.B * rec.actions[t];
        trace.max_noise_recovery_error = std::max(
            trace.max_noise_recovery_error, (recovered[t] - rec.noises[t]).norm());
      }
      const Matrix g =
          grad_total(sys, instance.cost, current, rec.perturbations, recovered, instance.x0);
      grad_params += current.collapse(g);
    }
    grad_params /= static_cast<Scalar>(batch);

    if (!grad_params.allFinite()) {
      trace.diverged = true;
      trace.diverged_at = n;
      break;
    }
    const Matrix raw = current.params - config.plan.eta_at(n) * grad_params;
    if (raw.norm() > config.divergence_norm) {
      trace.diverged = true;
      trace.diverged_at = n;
      break;
    }
    current.params = project_params(raw, current.set);

    if (logged) {
      const auto toc = Clock::now();
      trace.wall_time.push_back(std::chrono::duration<double>(toc - tic).count());
    }
  }
  return trace;
}

Matrix feasible_center(const Policy& policy) {
  switch (policy.set.kind) {
    case FeasibleKind::FrobeniusBall:
      return Matrix::Zero(policy.params.rows(), policy.params.cols());
    case FeasibleKind::RowSimplex:
      return Matrix::Constant(policy.params.rows(), policy.params.cols(),
                              policy.set.value / static_cast<Scalar>(policy.params.cols()));
  }
  throw std::logic_error("unknown feasible set");
}

namespace {

constexpr long kExactEnumerationCutoff = 300000;

GradOracle pick_oracle(const ControlInstance& instance, GradOracle requested) {
  if (requested != GradOracle::Auto) return requested;
  const long branches =
      enumeration_branches(instance.map, instance.noise, instance.system.T);
  if (branches > 0 && branches <= kExactEnumerationCutoff) return GradOracle::Enumeration;
  return GradOracle::Moments;
}

Matrix shifted_gradient(const ControlInstance& instance, const Policy& policy,
                        const Policy& deploy, GradOracle oracle) {
  switch (oracle) {
    case GradOracle::Enumeration:
      return policy.collapse(exact_total_gradient(instance.system, instance.cost, instance.map,
                                                  instance.noise, policy, deploy, instance.x0));
    case GradOracle::Moments:
      return policy.collapse(expected_cost_moments_gradient(
          instance.system, instance.cost, instance.map, instance.noise, policy, deploy,
          instance.x0));
    default:
      throw std::logic_error("oracle without closed-form gradient");
  }
}

}  // namespace

InnerResult minimize_shifted(const ControlInstance& instance, const Policy& deploy,
                             const InnerSolveOptions& options) {
  if (options.budget < 1) throw std::invalid_argument("budget must be positive");
  const GradOracle oracle = pick_oracle(instance, options.oracle);

  Policy current = instance.policy;
  current.params = feasible_center(current);

  InnerResult result;
  result.oracle_used = oracle;

  if (oracle == GradOracle::MonteCarlo) {
    // minibatch projected SGD with tail averaging
    Matrix avg = current.params;
    long avg_count = 1;
    std::uint64_t sample_counter = 0;
    for (long k = 0; k < options.budget; ++k) {
      Matrix grad = Matrix::Zero(current.params.rows(), current.params.cols());
      for (long b = 0; b < options.mc_batch; ++b) {
        const SeedPair s{options.seed.global ^ 0x9e3779b97f4a7c15ULL,
                         options.seed.local + (sample_counter++)};
        TrajectoryRecord rec = simulate_trajectory_shifted(
            instance.system, current, deploy, instance.map, instance.noise, instance.x0, s);
        grad += current.collapse(grad_total(instance.system, instance.cost, current,
                                            rec.perturbations, rec.noises, instance.x0));
      }
      grad /= static_cast<Scalar>(options.mc_batch);
      const Scalar eta = options.mc_eta0 / (1.0 + static_cast<Scalar>(k) / 50.0);
      current.params = project_params(current.params - eta * grad, current.set);
      if (2 * k >= options.budget) {
        avg += current.params;
        ++avg_count;
      }
    }
    current.params = project_params(avg / static_cast<Scalar>(avg_count), current.set);
    result.policy = current;
    result.iterations = options.budget;
    // residual estimated with one larger batch
    Matrix grad = Matrix::Zero(current.params.rows(), current.params.cols());
    for (long b = 0; b < 4 * options.mc_batch; ++b) {
      const SeedPair s{options.seed.global ^ 0xda3e39cb94b95bdbULL,
                       options.seed.local + static_cast<std::uint64_t>(b)};
      TrajectoryRecord rec = simulate_trajectory_shifted(
          instance.system, current, deploy, instance.map, instance.noise, instance.x0, s);
      grad += current.collapse(grad_total(instance.system, instance.cost, current,
                                          rec.perturbations, rec.noises, instance.x0));
    }
    grad /= static_cast<Scalar>(4 * options.mc_batch);
    const Scalar eta = options.mc_eta0;
    result.residual =
        (current.params - project_params(current.params - eta * grad, current.set)).norm() / eta;
    result.converged = result.residual <= options.tol;
    return result;
  }

  // Exact gradient path: the objective is a strongly convex quadratic in the
  // parameters, so a fixed 1/L step with projection converges linearly.
  const Matrix g0 = shifted_gradient(instance, current, deploy, oracle);
  Scalar lipschitz = 0.0;
  {
    Rng rng(options.seed, Stream::Solver);
    Matrix v(current.params.rows(), current.params.cols());
    for (Eigen::Index i = 0; i < v.rows(); ++i)
      for (Eigen::Index j = 0; j < v.cols(); ++j) v(i, j) = rng.normal();
    v /= v.norm();
    for (int it = 0; it < 30; ++it) {
      Policy probe = current;
      probe.params = current.params + v;
      const Matrix hv = shifted_gradient(instance, probe, deploy, oracle) - g0;
      const Scalar norm = hv.norm();
      if (norm < 1e-300) break;
      lipschitz = norm;
      v = hv / norm;
    }
  }
  if (lipschitz <= 0.0) lipschitz = 1.0;
  const Scalar eta = 1.0 / lipschitz;

  Scalar residual = std::numeric_limits<Scalar>::infinity();
  long k = 0;
  for (; k < options.budget; ++k) {
    const Matrix grad = shifted_gradient(instance, current, deploy, oracle);
    const Matrix next = project_params(current.params - eta * grad, current.set);
    residual = (current.params - next).norm() / eta;
    current.params = next;
    if (residual <= options.tol) {
      ++k;
      break;
    }
  }
  result.policy = current;
  result.converged = residual <= options.tol;
  result.residual = residual;
  result.iterations = k;
  return result;
}

FixedPointResult rrm_run(const ControlInstance& instance, const Policy& M0, int max_iters,
                         Scalar tol, InnerSolveOptions inner) {
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  FixedPointResult result;
  Policy current = M0;
  for (int n = 0; n < max_iters; ++n) {
    inner.seed.local += 1;  // decorrelate MC inner solves across outer steps
    const InnerResult step = minimize_shifted(instance, current, inner);
    if (!step.converged) result.inner_flagged = true;
    const Scalar gap = (step.policy.params - current.params).norm();
    result.gaps.push_back(gap);
    current = step.policy;
    result.iterations = n + 1;
    result.residual = gap;
    if (gap <= tol) {
      result.converged = true;
      break;
    }
  }
  result.m_star = current;
  return result;
}

Policy psc_reference(const ControlInstance& instance, Scalar tol, GradOracle oracle) {
  InnerSolveOptions inner;
  inner.oracle = oracle;
  inner.tol = tol / 10.0;
  inner.budget = 200000;
  Policy start = instance.policy;
  start.params = feasible_center(start);
  const FixedPointResult fp = rrm_run(instance, start, 200, tol, inner);
  if (!fp.converged)
    throw std::runtime_error("psc_reference: fixed-point iteration did not reach tolerance");
  return fp.m_star;
}

}  // namespace perfctl
