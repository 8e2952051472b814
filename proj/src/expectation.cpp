#include "perfctl/expectation.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

namespace perfctl {

ShiftedExpectation expected_cost_mc(const SystemConfig& config, const CostModel& model,
                                    const PerturbationMap& map, const NoiseModel& noise,
                                    const Policy& policy, const Policy& deploy, const Vector& x0,
                                    long n_samples, SeedPair seed, int jobs) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  std::vector<Scalar> values(static_cast<std::size_t>(n_samples));

  auto worker = [&](long begin, long end) {
    for (long k = begin; k < end; ++k) {
      TrajectoryRecord rec = simulate_trajectory_shifted(
          config, policy, deploy, map, noise, x0, SeedPair{seed.global, seed.local + static_cast<std::uint64_t>(k)});
      fill_stage_costs(rec, config, model, policy);
      Scalar j = 0.0;
      for (Scalar c : rec.stage_costs) j += c;
      values[static_cast<std::size_t>(k)] = j;
    }
  };

  jobs = std::max(1, jobs);
  if (jobs == 1 || n_samples < 2 * jobs) {
    worker(0, n_samples);
  } else {
    std::vector<std::thread> pool;
    const long chunk = (n_samples + jobs - 1) / jobs;
    for (int j = 0; j < jobs; ++j) {
      const long b = j * chunk;
      const long e = std::min(n_samples, b + chunk);
      if (b >= e) break;
      pool.emplace_back(worker, b, e);
    }
    for (auto& th : pool) th.join();
  }

  // fixed sequential accumulation so the estimate is thread-count independent
  Scalar mean = 0.0;
  for (Scalar v : values) mean += v;
  mean /= static_cast<Scalar>(n_samples);
  Scalar var = 0.0;
  for (Scalar v : values) var += (v - mean) * (v - mean);
  var = n_samples > 1 ? var / static_cast<Scalar>(n_samples - 1) : 0.0;

  ShiftedExpectation out;
  out.estimate = mean;
  out.std_error = std::sqrt(var / static_cast<Scalar>(n_samples));
  out.method = ExpectationMethod::MonteCarlo;
  out.n_samples = n_samples;
  return out;
}

long enumeration_branches(const PerturbationMap& map, const NoiseModel& noise, int T) {
  if (!map.finite_support() || !noise.finite_support()) return -1;
  const long joint = static_cast<long>(noise.support().size()) *
                     static_cast<long>(map.kind == PerturbationKind::Null ? 1
                                                                          : map.factor_atoms.size());
  long total = 1;
  for (int t = 0; t < T; ++t) {
    if (total > 1000000L / joint) return 1000001L;
    total *= joint;
  }
  return total;
}

namespace {

constexpr long kEnumerationBudget = 1000000;

template <typename Leaf>
void enumerate_sequences(const SystemConfig& config, const PerturbationMap& map,
                         const NoiseModel& noise, const Policy& deploy, Leaf&& leaf) {
  const auto noise_atoms = noise.support();
  std::vector<std::vector<std::pair<Matrix, Scalar>>> delta_atoms(config.T);
  for (int t = 0; t < config.T; ++t) delta_atoms[t] = map.support(t, deploy);

  long branches = 1;
  for (int t = 0; t < config.T; ++t) {
    const long joint = static_cast<long>(noise_atoms.size() * delta_atoms[t].size());
    if (branches > kEnumerationBudget / joint)
      throw std::invalid_argument("enumeration budget exceeded");
    branches *= joint;
  }

  std::vector<Matrix> deltas(config.T);
  std::vector<Vector> noises(config.T);
  auto dfs = [&](auto&& self, int t, Scalar prob) -> void {
    if (t == config.T) {
      leaf(deltas, noises, prob);
      return;
    }
    for (const auto& [dm, dp] : delta_atoms[t]) {
      deltas[t] = dm;
      for (const auto& [wv, wp] : noise_atoms) {
        noises[t] = wv;
        self(self, t + 1, prob * dp * wp);
      }
    }
  };
  dfs(dfs, 0, 1.0);
}

}  // namespace

ShiftedExpectation expected_cost_exact(const SystemConfig& config, const CostModel& model,
                                       const PerturbationMap& map, const NoiseModel& noise,
                                       const Policy& policy, const Policy& deploy,
                                       const Vector& x0) {
  Scalar total = 0.0;
  enumerate_sequences(config, map, noise, deploy,
                      [&](const std::vector<Matrix>& deltas, const std::vector<Vector>& noises,
                          Scalar prob) {
                        total += prob * total_cost_fixed(config, model, policy, deltas, noises, x0);
                      });
  ShiftedExpectation out;
  out.estimate = total;
  out.std_error = 0.0;
  out.method = ExpectationMethod::Enumeration;
  out.n_samples = 0;
  return out;
}

Matrix exact_total_gradient(const SystemConfig& config, const CostModel& model,
                            const PerturbationMap& map, const NoiseModel& noise,
                            const Policy& policy, const Policy& deploy, const Vector& x0) {
  Matrix grad = Matrix::Zero(config.du, static_cast<Eigen::Index>(config.H) * config.dx);
  enumerate_sequences(config, map, noise, deploy,
                      [&](const std::vector<Matrix>& deltas, const std::vector<Vector>& noises,
                          Scalar prob) {
                        grad += prob * grad_total(config, model, policy, deltas, noises, x0);
                      });
  return grad;
}

namespace {

struct MomentWorkspace {
  int dx = 0, du = 0, H = 0, zdim = 0;
  Matrix shift;   // window down-shift
  Matrix G;       // noise injection [I; I; 0...]
  Matrix W;       // per-stage cost weight on E[z z^T]
  Matrix Lu;      // [-K, M_full]
  Vector g;       // G * E[w]
  Matrix GSwG;    // G E[w w^T] G^T
};

MomentWorkspace make_workspace(const SystemConfig& config, const CostModel& model,
                               const NoiseModel& noise, const Matrix& m_full) {
  MomentWorkspace ws;
  ws.dx = config.dx;
  ws.du = config.du;
  ws.H = config.H;
  ws.zdim = config.dx * (1 + config.H);

  ws.shift = Matrix::Zero(config.H * config.dx, config.H * config.dx);
  for (int i = 1; i < config.H; ++i)
    ws.shift.block(i * config.dx, (i - 1) * config.dx, config.dx, config.dx) =
        Matrix::Identity(config.dx, config.dx);

  ws.G = Matrix::Zero(ws.zdim, config.dx);
  ws.G.topRows(config.dx) = Matrix::Identity(config.dx, config.dx);
  ws.G.block(config.dx, 0, config.dx, config.dx) = Matrix::Identity(config.dx, config.dx);

  ws.Lu = Matrix::Zero(config.du, ws.zdim);
  ws.Lu.leftCols(config.dx) = -config.K;
  ws.Lu.rightCols(config.H * config.dx) = m_full;

  ws.W = Matrix::Zero(ws.zdim, ws.zdim);
  ws.W.topLeftCorner(config.dx, config.dx) = model.Qx;
  ws.W += ws.Lu.transpose() * model.Ru * ws.Lu;

  ws.g = ws.G * noise.mean();
  ws.GSwG = ws.G * noise.second_moment() * ws.G.transpose();
  return ws;
}

Matrix assemble_fbar(const SystemConfig& config, const MomentWorkspace& ws,
                     const Matrix& mean_delta, const Matrix& m_full) {
  Matrix f = Matrix::Zero(ws.zdim, ws.zdim);
  f.topLeftCorner(config.dx, config.dx) = config.a_tilde() + mean_delta;
  f.block(0, config.dx, config.dx, config.H * config.dx) = config.B * m_full;
  f.bottomRightCorner(config.H * config.dx, config.H * config.dx) = ws.shift;
  return f;
}

}  // namespace

Scalar expected_cost_moments(const SystemConfig& config, const CostModel& model,
                             const PerturbationMap& map, const NoiseModel& noise,
                             const Policy& policy, const Policy& deploy, const Vector& x0) {
  const Matrix m_full = policy.full();
  const MomentWorkspace ws = make_workspace(config, model, noise, m_full);

  Vector m = Vector::Zero(ws.zdim);
  m.head(config.dx) = x0;
  Matrix P = m * m.transpose();

  Scalar total = (ws.W.cwiseProduct(P)).sum();
  for (int t = 0; t < config.T; ++t) {
    const Matrix mean_d = map.mean(t, deploy);
    const Matrix fbar = assemble_fbar(config, ws, mean_d, m_full);
    const Matrix pxx = P.topLeftCorner(config.dx, config.dx);
    Matrix pnext = fbar * P * fbar.transpose();
    pnext.topLeftCorner(config.dx, config.dx) +=
        map.e_delta_x_deltaT(t, deploy, pxx) - mean_d * pxx * mean_d.transpose();
    const Vector fm = fbar * m;
    pnext += fm * ws.g.transpose() + ws.g * fm.transpose() + ws.GSwG;
    m = fm + ws.g;
    P = pnext;
    total += (ws.W.cwiseProduct(P)).sum();
  }
  return total;
}

Matrix expected_cost_moments_gradient(const SystemConfig& config, const CostModel& model,
                                      const PerturbationMap& map, const NoiseModel& noise,
                                      const Policy& policy, const Policy& deploy,
                                      const Vector& x0) {
  const Matrix m_full = policy.full();
  const MomentWorkspace ws = make_workspace(config, model, noise, m_full);
  const int dx = config.dx;
  const int wcols = config.H * config.dx;

  // forward pass, storing moments and mean transitions
  std::vector<Matrix> P(config.T + 1);
  std::vector<Vector> m(config.T + 1);
  std::vector<Matrix> fbar(config.T);
  m[0] = Vector::Zero(ws.zdim);
  m[0].head(dx) = x0;
  P[0] = m[0] * m[0].transpose();
  for (int t = 0; t < config.T; ++t) {
    const Matrix mean_d = map.mean(t, deploy);
    fbar[t] = assemble_fbar(config, ws, mean_d, m_full);
    const Matrix pxx = P[t].topLeftCorner(dx, dx);
    Matrix pnext = fbar[t] * P[t] * fbar[t].transpose();
    pnext.topLeftCorner(dx, dx) +=
        map.e_delta_x_deltaT(t, deploy, pxx) - mean_d * pxx * mean_d.transpose();
    const Vector fm = fbar[t] * m[t];
    pnext += fm * ws.g.transpose() + ws.g * fm.transpose() + ws.GSwG;
    m[t + 1] = fm + ws.g;
    P[t + 1] = pnext;
  }

  // direct dependence of the stage weight W(M) on M
  Matrix grad = Matrix::Zero(config.du, wcols);
  for (int t = 0; t <= config.T; ++t)
    grad += 2.0 * (model.Ru * ws.Lu * P[t]).rightCols(wcols);

  // adjoint pass
  Matrix lambda = ws.W;
  Vector mu = Vector::Zero(ws.zdim);
  for (int t = config.T - 1; t >= 0; --t) {
    const Matrix mean_d = map.mean(t, deploy);
    grad += 2.0 * config.B.transpose() * (lambda * fbar[t] * P[t]).block(0, dx, dx, wcols);
    grad += 2.0 * config.B.transpose() *
            ((lambda * ws.g) * m[t].transpose()).block(0, dx, dx, wcols);
    grad += config.B.transpose() * (mu * m[t].transpose()).block(0, dx, dx, wcols);

    const Matrix lxx = lambda.topLeftCorner(dx, dx);
    Matrix lnext = ws.W + fbar[t].transpose() * lambda * fbar[t];
    lnext.topLeftCorner(dx, dx) +=
        map.e_deltaT_x_delta(t, deploy, lxx) - mean_d.transpose() * lxx * mean_d;
    mu = fbar[t].transpose() * (mu + 2.0 * (lambda * ws.g));
    lambda = lnext;
  }
  return grad;
}

}  // namespace perfctl
