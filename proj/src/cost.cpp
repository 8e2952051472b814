#include "perfctl/cost.hpp"

#include <Eigen/Eigenvalues>
#include <stdexcept>

namespace perfctl {

CostModel CostModel::quadratic(const Matrix& Qx, const Matrix& Ru) {
  if (Qx.rows() != Qx.cols() || Ru.rows() != Ru.cols())
    throw std::invalid_argument("weight matrices must be square");
  CostModel m;
  m.kind = CostKind::Quadratic;
  m.Qx = Qx;
  m.Ru = Ru;
  Eigen::SelfAdjointEigenSolver<Matrix> ex(Qx), eu(Ru);
  if (ex.eigenvalues().minCoeff() <= 0.0 || eu.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("quadratic weights must be positive definite");
  return m;
}

CostModel CostModel::stock_risk(int L) {
  CostModel m;
  m.kind = CostKind::StockRisk;
  m.Qx = Matrix::Zero(2 * L, 2 * L);
  m.Ru = Matrix::Zero(2 * L, 2 * L);
  m.Qx.topLeftCorner(L, L) = Matrix::Identity(L, L);
  m.Ru.topLeftCorner(L, L) = Matrix::Identity(L, L);
  return m;
}

namespace {
Scalar min_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  return es.eigenvalues().minCoeff();
}
Scalar max_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  return es.eigenvalues().maxCoeff();
}
}  // namespace

Scalar CostModel::mu() const { return 2.0 * std::min(min_eig(Qx), min_eig(Ru)); }

Scalar CostModel::sigma_s() const { return 2.0 * std::max(max_eig(Qx), max_eig(Ru)); }

Scalar CostModel::G() const { return 2.0 * std::max(max_eig(Qx), max_eig(Ru)); }

Scalar CostModel::stage_cost(int, const Vector& x, const Vector& u) const {
  return x.dot(Qx * x) + u.dot(Ru * u);
}

std::pair<Vector, Vector> CostModel::stage_grads(int, const Vector& x, const Vector& u) const {
  return {2.0 * (Qx * x), 2.0 * (Ru * u)};
}

Vector final_action(const SystemConfig& config, const Policy& policy,
                    const TrajectoryRecord& rec) {
  const Vector window = disturbance_window(rec.noises, config.T, config.H, config.dx);
  return control_action(policy.full(), config.K, rec.states.back(), window);
}

void fill_stage_costs(TrajectoryRecord& rec, const SystemConfig& config, const CostModel& model,
                      const Policy& policy) {
  rec.stage_costs.assign(config.T + 1, 0.0);
  for (int t = 0; t < config.T; ++t)
    rec.stage_costs[t] = model.stage_cost(t, rec.states[t], rec.actions[t]);
  rec.stage_costs[config.T] =
      model.stage_cost(config.T, rec.states[config.T], final_action(config, policy, rec));
}

Scalar total_cost_fixed(const SystemConfig& config, const CostModel& model, const Policy& policy,
                        const std::vector<Matrix>& perturbations,
                        const std::vector<Vector>& noises, const Vector& x0) {
  const Matrix m_full = policy.full();
  std::vector<Vector> past;
  past.reserve(config.T);
  Vector x = x0;
  Scalar total = 0.0;
  for (int t = 0; t < config.T; ++t) {
    const Vector window = disturbance_window(past, t, config.H, config.dx);
    const Vector u = control_action(m_full, config.K, x, window);
    total += model.stage_cost(t, x, u);
    x = step(config.A + perturbations[t], config.B, x, u, noises[t]);
    past.push_back(noises[t]);
  }
  const Vector window = disturbance_window(past, config.T, config.H, config.dx);
  const Vector u_final = control_action(m_full, config.K, x, window);
  total += model.stage_cost(config.T, x, u_final);
  return total;
}

Matrix grad_policy_stage(const SystemConfig& config, const CostModel& model,
                         const Policy& policy, const std::vector<Matrix>& perturbations,
                         const std::vector<Vector>& noises, const Vector& x0, int t) {
  const Eigen::Index cols = static_cast<Eigen::Index>(config.H) * config.dx;
  Matrix grad = Matrix::Zero(config.du, cols);
  if (t == 0) return grad;  // u_0 = -K x_0, no window dependence
  if (t > config.T) throw std::invalid_argument("t must be <= T");
  if (static_cast<int>(perturbations.size()) < t || static_cast<int>(noises.size()) < t)
    throw std::invalid_argument("missing realizations");

  const std::vector<Vector> states = replay_states(config, policy, perturbations, noises, x0);
  const Vector window_t = disturbance_window(noises, t, config.H, config.dx);
  const Vector u_t = control_action(policy.full(), config.K, states[t], window_t);
  const auto [gx, gu] = model.stage_grads(t, states[t], u_t);

  const Matrix a_tilde = config.a_tilde();
  // chain = (A~ + Delta_{t-1}) ... (A~ + Delta_{i+1}), built incrementally
  Matrix chain = Matrix::Identity(config.dx, config.dx);
  for (int i = t - 1; i >= 0; --i) {
    const Matrix cb = chain * config.B;
    const Vector window_i = disturbance_window(noises, i, config.H, config.dx);
    grad += (cb.transpose() * gx) * window_i.transpose();
    grad -= ((config.K * cb).transpose() * gu) * window_i.transpose();
    if (i > 0) chain = chain * (a_tilde + perturbations[i]);
  }
  grad += gu * window_t.transpose();
  return grad;
}

Matrix grad_total(const SystemConfig& config, const CostModel& model, const Policy& policy,
                  const std::vector<Matrix>& perturbations, const std::vector<Vector>& noises,
                  const Vector& x0) {
  const Eigen::Index cols = static_cast<Eigen::Index>(config.H) * config.dx;
  Matrix grad = Matrix::Zero(config.du, cols);

  const std::vector<Vector> states = replay_states(config, policy, perturbations, noises, x0);
  const Matrix a_tilde = config.a_tilde();
  const Matrix m_full = policy.full();

  for (int t = 1; t <= config.T; ++t) {
    const Vector window_t = disturbance_window(noises, t, config.H, config.dx);
    const Vector u_t = control_action(m_full, config.K, states[t], window_t);
    const auto [gx, gu] = model.stage_grads(t, states[t], u_t);

    Matrix chain = Matrix::Identity(config.dx, config.dx);
    for (int i = t - 1; i >= 0; --i) {
      const Matrix cb = chain * config.B;
      const Vector window_i = disturbance_window(noises, i, config.H, config.dx);
      grad += (cb.transpose() * gx) * window_i.transpose();
      grad -= ((config.K * cb).transpose() * gu) * window_i.transpose();
      if (i > 0) chain = chain * (a_tilde + perturbations[i]);
    }
    grad += gu * window_t.transpose();
  }
  return grad;
}

Matrix fd_gradient(const std::function<Scalar(const Matrix&)>& f, const Matrix& m, Scalar h) {
  if (!(h > 0.0)) throw std::invalid_argument("step must be positive");
  Matrix grad(m.rows(), m.cols());
  Matrix probe = m;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      probe(i, j) = m(i, j) + h;
      const Scalar up = f(probe);
      probe(i, j) = m(i, j) - h;
      const Scalar dn = f(probe);
      probe(i, j) = m(i, j);
      grad(i, j) = (up - dn) / (2.0 * h);
    }
  }
  return grad;
}

}  // namespace perfctl
