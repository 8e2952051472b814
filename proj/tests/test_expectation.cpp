#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracle_instances.hpp"
#include "perfctl/expectation.hpp"

using namespace perfctl;
using namespace perfctl::testing;

TEST_CASE("trivial instance has zero expected cost") {
  OracleSpec spec;
  ControlInstance inst = make_oracle_instance(spec);
  inst.map = PerturbationMap::null_map(1, spec.T);
  inst.noise = NoiseModel::zero(1);
  inst.x0.setZero();
  inst.system.x0_bound = 0.0;
  const ShiftedExpectation mc = expected_cost_mc(inst.system, inst.cost, inst.map, inst.noise,
                                                 inst.policy, inst.policy, inst.x0, 64,
                                                 SeedPair{1, 0});
  CHECK(mc.estimate == 0.0);
  CHECK(mc.std_error == 0.0);
}

TEST_CASE("singleton supports reduce enumeration to the deterministic cost") {
  OracleSpec spec;
  ControlInstance inst = make_oracle_instance(spec);
  inst.map = PerturbationMap::null_map(1, spec.T);
  Vector atom(1);
  atom << 0.0;
  inst.noise = NoiseModel::discrete({atom}, {1.0});
  const ShiftedExpectation exact = expected_cost_exact(inst.system, inst.cost, inst.map,
                                                       inst.noise, inst.policy, inst.policy,
                                                       inst.x0);
  const std::vector<Matrix> deltas(spec.T, Matrix::Zero(1, 1));
  const std::vector<Vector> noises(spec.T, atom);
  const Scalar direct =
      total_cost_fixed(inst.system, inst.cost, inst.policy, deltas, noises, inst.x0);
  CHECK(exact.estimate == doctest::Approx(direct).epsilon(1e-15));
  CHECK(exact.std_error == 0.0);
}

TEST_CASE("T=2 binary symmetric noise matches the hand-expanded average") {
  ControlInstance inst;
  inst.system.dx = 1;
  inst.system.du = 1;
  inst.system.A = Matrix::Constant(1, 1, 0.5);
  inst.system.B = Matrix::Identity(1, 1);
  inst.system.K = Matrix::Zero(1, 1);
  inst.system.T = 2;
  inst.system.H = 1;
  inst.system.kappa = 1.0;
  inst.system.gamma = 0.5;
  Vector vp(1), vm(1);
  vp << 0.7;
  vm << -0.7;
  inst.noise = NoiseModel::discrete({vp, vm}, {0.5, 0.5});
  inst.system.W = inst.noise.w_bound();
  inst.system.sigma2 = inst.noise.sigma2();
  inst.map = PerturbationMap::null_map(1, 2);
  inst.cost = CostModel::quadratic(Matrix::Identity(1, 1), Matrix::Identity(1, 1));
  inst.x0 = Vector::Zero(1);
  inst.policy = Policy::dense(Matrix::Constant(1, 1, 0.4), 1, FeasibleSet::ball(1.0));

  // two w_0 branches x two w_1 branches; hand expansion with m = 0.4, a = 0.5:
  // x_0 = 0, u_0 = 0, c_0 = 0
  // x_1 = w_0, u_1 = m w_0, c_1 = w_0^2 (1 + m^2)
  // x_2 = (a + m) w_0 + w_1, u_2 = m w_1, c_2 = ((a+m) w_0 + w_1)^2 + m^2 w_1^2
  const Scalar w2 = 0.49;
  const Scalar m = 0.4, a = 0.5;
  const Scalar expect = w2 * (1 + m * m) + ((a + m) * (a + m) * w2 + w2) + m * m * w2;
  const ShiftedExpectation exact = expected_cost_exact(inst.system, inst.cost, inst.map,
                                                       inst.noise, inst.policy, inst.policy,
                                                       inst.x0);
  CHECK(exact.estimate == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("Monte Carlo agrees with enumeration within three standard errors") {
  OracleSpec spec;
  spec.T = 3;
  spec.H = 1;
  ControlInstance inst = make_oracle_instance(spec);
  Rng rng(SeedPair{51, 0}, Stream::Eval);
  const Policy policy = random_feasible(inst, rng);
  const Policy deploy = random_feasible(inst, rng);
  const ShiftedExpectation exact = expected_cost_exact(inst.system, inst.cost, inst.map,
                                                       inst.noise, policy, deploy, inst.x0);
  const ShiftedExpectation mc =
      expected_cost_mc(inst.system, inst.cost, inst.map, inst.noise, policy, deploy, inst.x0,
                       100000, SeedPair{52, 0}, 2);
  CHECK(std::abs(mc.estimate - exact.estimate) <= 3.0 * mc.std_error);
}

TEST_CASE("standard error shrinks like one over root two when doubling samples") {
  OracleSpec spec;
  ControlInstance inst = make_oracle_instance(spec);
  Rng rng(SeedPair{53, 0}, Stream::Eval);
  const Policy policy = random_feasible(inst, rng);
  int in_range = 0;
  const int reps = 10;
  for (int rep = 0; rep < reps; ++rep) {
    const SeedPair seed{1000 + static_cast<std::uint64_t>(rep), 0};
    const auto half = expected_cost_mc(inst.system, inst.cost, inst.map, inst.noise, policy,
                                       policy, inst.x0, 4000, seed);
    const auto full = expected_cost_mc(inst.system, inst.cost, inst.map, inst.noise, policy,
                                       policy, inst.x0, 8000, seed);
    const Scalar ratio = full.std_error / half.std_error;
    if (ratio >= 0.6 && ratio <= 0.82) ++in_range;
  }
  CHECK(in_range >= 8);  // 1/sqrt(2) = 0.707 with sampling noise
}

TEST_CASE("thread count does not change the Monte Carlo estimate") {
  OracleSpec spec;
  ControlInstance inst = make_oracle_instance(spec);
  Rng rng(SeedPair{54, 0}, Stream::Eval);
  const Policy policy = random_feasible(inst, rng);
  const auto one = expected_cost_mc(inst.system, inst.cost, inst.map, inst.noise, policy,
                                    policy, inst.x0, 5000, SeedPair{55, 0}, 1);
  const auto four = expected_cost_mc(inst.system, inst.cost, inst.map, inst.noise, policy,
                                     policy, inst.x0, 5000, SeedPair{55, 0}, 4);
  CHECK(one.estimate == four.estimate);
  CHECK(one.std_error == four.std_error);
}

TEST_CASE("enumeration budget is enforced") {
  OracleSpec spec;
  spec.d = 2;
  spec.T = 12;  // (4 noise atoms * 2 factor atoms)^12 >> 1e6
  spec.H = 1;
  ControlInstance inst = make_oracle_instance(spec);
  CHECK_THROWS(expected_cost_exact(inst.system, inst.cost, inst.map, inst.noise, inst.policy,
                                   inst.policy, inst.x0));
}

TEST_CASE("moment propagation reproduces the enumerated expectation") {
  Rng rng(SeedPair{56, 0}, Stream::Eval);
  for (int trial = 0; trial < 12; ++trial) {
    OracleSpec spec;
    spec.d = 1 + static_cast<int>(rng.next_u64() % 2);
    spec.H = 1 + static_cast<int>(rng.next_u64() % 2);
    spec.T = spec.H + 2;
    spec.a = rng.uniform(-0.7, 0.7);
    spec.b = rng.uniform(0.4, 1.2);
    spec.amplitude = rng.uniform(0.0, 0.4);
    ControlInstance inst = make_oracle_instance(spec);
    const Policy policy = random_feasible(inst, rng);
    const Policy deploy = random_feasible(inst, rng);
    const Scalar exact = expected_cost_exact(inst.system, inst.cost, inst.map, inst.noise,
                                             policy, deploy, inst.x0)
                             .estimate;
    const Scalar moments = expected_cost_moments(inst.system, inst.cost, inst.map, inst.noise,
                                                 policy, deploy, inst.x0);
    CHECK(moments == doctest::Approx(exact).epsilon(1e-10));
  }
}

TEST_CASE("exact gradients: enumeration, moments and finite differences agree") {
  Rng rng(SeedPair{57, 0}, Stream::Eval);
  for (int trial = 0; trial < 8; ++trial) {
    OracleSpec spec;
    spec.d = 1 + static_cast<int>(rng.next_u64() % 2);
    spec.H = 1 + static_cast<int>(rng.next_u64() % 2);
    spec.T = spec.H + 2;
    spec.amplitude = rng.uniform(0.05, 0.35);
    ControlInstance inst = make_oracle_instance(spec);
    const Policy policy = random_feasible(inst, rng);
    const Policy deploy = random_feasible(inst, rng);

    const Matrix g_enum = exact_total_gradient(inst.system, inst.cost, inst.map, inst.noise,
                                               policy, deploy, inst.x0);
    const Matrix g_mom = expected_cost_moments_gradient(inst.system, inst.cost, inst.map,
                                                        inst.noise, policy, deploy, inst.x0);
    CHECK((g_enum - g_mom).norm() <= 1e-9 * std::max(1.0, g_enum.norm()));

    const auto cost_at = [&](const Matrix& params) {
      Policy p = policy;
      p.params = params;
      return expected_cost_moments(inst.system, inst.cost, inst.map, inst.noise, p, deploy,
                                   inst.x0);
    };
    const Matrix g_fd = fd_gradient(cost_at, policy.params, 1e-6);
    CHECK((g_mom - g_fd).norm() <= 1e-5 * std::max(1.0, g_fd.norm()));
  }
}

TEST_CASE("per-stage expected cost is midpoint convex in the policy") {
  Rng rng(SeedPair{58, 0}, Stream::Eval);
  OracleSpec spec;
  spec.T = 4;
  spec.H = 2;
  ControlInstance inst = make_oracle_instance(spec);
  for (int trial = 0; trial < 20; ++trial) {
    const Policy m1 = random_feasible(inst, rng);
    const Policy m2 = random_feasible(inst, rng);
    const Policy mp = random_feasible(inst, rng);
    Policy mid = m1;
    mid.params = 0.5 * (m1.params + m2.params);
    const Scalar c1 = expected_cost_exact(inst.system, inst.cost, inst.map, inst.noise, m1, mp,
                                          inst.x0)
                          .estimate;
    const Scalar c2 = expected_cost_exact(inst.system, inst.cost, inst.map, inst.noise, m2, mp,
                                          inst.x0)
                          .estimate;
    const Scalar cm = expected_cost_exact(inst.system, inst.cost, inst.map, inst.noise, mid, mp,
                                          inst.x0)
                          .estimate;
    CHECK(cm <= 0.5 * (c1 + c2) + 1e-10);
  }
}

TEST_CASE("strong convexity of the shifted expectation holds with mu_tilde") {
  Rng rng(SeedPair{59, 0}, Stream::Eval);
  OracleSpec spec;
  spec.T = 4;
  spec.H = 2;
  spec.amplitude = 0.15;
  ControlInstance inst = make_oracle_instance(spec);
  const ConstantsBundle bundle = inst.constants();
  Scalar worst = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    const Policy m1 = random_feasible(inst, rng);
    const Policy m2 = random_feasible(inst, rng);
    const Policy mp = random_feasible(inst, rng);
    const Scalar c1 = expected_cost_exact(inst.system, inst.cost, inst.map, inst.noise, m1, mp,
                                          inst.x0)
                          .estimate;
    const Scalar c2 = expected_cost_exact(inst.system, inst.cost, inst.map, inst.noise, m2, mp,
                                          inst.x0)
                          .estimate;
    const Matrix g2 = exact_total_gradient(inst.system, inst.cost, inst.map, inst.noise, m2, mp,
                                           inst.x0);
    const Matrix diff = m1.params - m2.params;
    const Scalar residual = c1 - c2 - (g2.array() * diff.array()).sum() -
                            0.5 * bundle.mu_tilde * diff.squaredNorm();
    worst = std::min(worst, residual);
  }
  CHECK(worst >= -1e-8);
}

TEST_CASE("smoothness bound with the lambda and nu constants") {
  Rng rng(SeedPair{60, 0}, Stream::Eval);
  OracleSpec spec;
  spec.T = 4;
  spec.H = 2;
  spec.amplitude = 0.15;
  ControlInstance inst = make_oracle_instance(spec);
  const ConstantsBundle bundle = inst.constants();
  for (int trial = 0; trial < 30; ++trial) {
    const Policy m1 = random_feasible(inst, rng);
    const Policy m2 = random_feasible(inst, rng);
    const Policy ma = random_feasible(inst, rng);
    const Policy mb = random_feasible(inst, rng);
    const Matrix g1 = exact_total_gradient(inst.system, inst.cost, inst.map, inst.noise, m1, ma,
                                           inst.x0);
    const Matrix g2 = exact_total_gradient(inst.system, inst.cost, inst.map, inst.noise, m2, mb,
                                           inst.x0);
    const Scalar lhs = (g1 - g2).norm();
    // condition_lhs = sum_t eps_t sum_{i>t} nu_i is exactly the coefficient
    // multiplying ||M - M'||_F in the bound
    const Scalar rhs = bundle.sum_lambda * (m1.params - m2.params).norm() +
                       bundle.condition_lhs * (ma.params - mb.params).norm();
    CHECK(lhs <= rhs + 1e-8);
  }
}

TEST_CASE("gradient variance is bounded by T times the vartheta sum") {
  OracleSpec spec;
  spec.T = 3;
  spec.H = 1;
  spec.amplitude = 0.2;
  ControlInstance inst = make_oracle_instance(spec);
  const ConstantsBundle bundle = inst.constants();
  Rng rng(SeedPair{61, 0}, Stream::Eval);
  const Policy policy = random_feasible(inst, rng);

  const Matrix mean_grad = exact_total_gradient(inst.system, inst.cost, inst.map, inst.noise,
                                                policy, policy, inst.x0);
  // exact second moment of ||grad J - grad C||^2 over the finite support
  Scalar var = 0.0;
  const auto noise_atoms = inst.noise.support();
  std::vector<std::vector<std::pair<Matrix, Scalar>>> datoms(inst.system.T);
  for (int t = 0; t < inst.system.T; ++t) datoms[t] = inst.map.support(t, policy);
  std::vector<Matrix> deltas(inst.system.T);
  std::vector<Vector> noises(inst.system.T);
  const auto dfs = [&](auto&& self, int t, Scalar prob) -> void {
    if (t == inst.system.T) {
      const Matrix g =
          grad_total(inst.system, inst.cost, policy, deltas, noises, inst.x0);
      var += prob * (g - mean_grad).squaredNorm();
      return;
    }
    for (const auto& [dm, dp] : datoms[t]) {
      deltas[t] = dm;
      for (const auto& [wv, wp] : noise_atoms) {
        noises[t] = wv;
        self(self, t + 1, prob * dp * wp);
      }
    }
  };
  dfs(dfs, 0, 1.0);

  Scalar bound = 0.0;
  for (int t = 1; t <= bundle.T; ++t) bound += bundle.vartheta[t] * bundle.vartheta[t];
  bound *= bundle.T;
  CHECK(var <= bound);
}
