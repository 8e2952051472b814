#include "perfctl/perturbation.hpp"

#include <cmath>
#include <stdexcept>

namespace perfctl {

namespace {

struct QuadratureRule {
  std::vector<Scalar> nodes;
  std::vector<Scalar> weights;
};

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
const QuadratureRule& gauss_legendre_64() {
  static const QuadratureRule rule = [] {
    const int n = 64;
    QuadratureRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n / 2; ++i) {
      Scalar x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      Scalar pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        Scalar p0 = 1.0, p1 = 0.0;
        for (int j = 0; j < n; ++j) {
          const Scalar p2 = p1;
          p1 = p0;
          p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
        }
        pp = n * (x * p0 - p1) / (x * x - 1.0);
        const Scalar dx = p0 / pp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      r.nodes[i] = -x;
      r.nodes[n - 1 - i] = x;
      const Scalar w = 2.0 / ((1.0 - x * x) * pp * pp);
      r.weights[i] = w;
      r.weights[n - 1 - i] = w;
    }
    return r;
  }();
  return rule;
}

Scalar normal_cdf(Scalar z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

Scalar daily_log_growth(Scalar v, const StockVolParams& p) {
  return (p.r - 0.5 * v * v) / static_cast<Scalar>(p.T) + v / std::sqrt(static_cast<Scalar>(p.T));
}

}  // namespace

Scalar clipped_gaussian_expectation(const std::function<Scalar(Scalar)>& f, Scalar mean,
                                    Scalar std_dev, Scalar clip) {
  if (std_dev <= 1e-12) {
    const Scalar v = std::min(clip, std::max(-clip, mean));
    return f(v);
  }
  const auto& rule = gauss_legendre_64();
  const Scalar inv = 1.0 / (std_dev * std::sqrt(2.0 * M_PI));
  Scalar acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const Scalar v = clip * rule.nodes[i];
    const Scalar z = (v - mean) / std_dev;
    acc += rule.weights[i] * clip * f(v) * inv * std::exp(-0.5 * z * z);
  }
  acc += f(-clip) * normal_cdf((-clip - mean) / std_dev);
  acc += f(clip) * (1.0 - normal_cdf((clip - mean) / std_dev));
  return acc;
}

PerturbationMap PerturbationMap::null_map(int dx, int T) {
  PerturbationMap m;
  m.kind = PerturbationKind::Null;
  m.dx = dx;
  m.T = T;
  m.eps.assign(T, 0.0);
  m.xi.assign(T, 0.0);
  return m;
}

PerturbationMap PerturbationMap::scaled_factor(int T, std::vector<Scalar> amplitude,
                                               Matrix direction, std::vector<Matrix> atoms,
                                               std::vector<Scalar> probs) {
  if (static_cast<int>(amplitude.size()) != T)
    throw std::invalid_argument("amplitude schedule length must equal T");
  if (atoms.empty() || atoms.size() != probs.size())
    throw std::invalid_argument("factor atoms and probabilities must match");
  PerturbationMap m;
  m.kind = PerturbationKind::ScaledFactor;
  m.dx = static_cast<int>(atoms.front().rows());
  m.T = T;
  m.amplitude = std::move(amplitude);
  const Scalar dn = direction.norm();
  if (dn <= 0.0) throw std::invalid_argument("direction must be nonzero");
  m.direction = direction / dn;
  m.factor_atoms = std::move(atoms);
  m.factor_probs = std::move(probs);

  Scalar mean_fro = 0.0;
  Scalar max_spec = 0.0;
  for (std::size_t k = 0; k < m.factor_atoms.size(); ++k) {
    mean_fro += m.factor_probs[k] * m.factor_atoms[k].norm();
    max_spec = std::max(max_spec, spectral_norm(m.factor_atoms[k]));
  }
  m.eps.resize(T);
  m.xi.resize(T);
  for (int t = 0; t < T; ++t) {
    m.eps[t] = m.amplitude[t] * mean_fro;   // W^1 bound under the identity coupling
    m.xi[t] = m.amplitude[t] * max_spec;    // |tanh| < 1
  }
  return m;
}

PerturbationMap PerturbationMap::stock_volatility(const StockVolParams& params,
                                                  std::vector<Scalar> schedule) {
  if (static_cast<int>(schedule.size()) != params.T)
    throw std::invalid_argument("sensitivity schedule length must equal T");
  PerturbationMap m;
  m.kind = PerturbationKind::StockVolatility;
  m.dx = 2 * params.L;
  m.T = params.T;
  m.svol = params;
  m.eps = std::move(schedule);
  m.xi.resize(m.T);
  m.m1.resize(m.T);
  m.m2.resize(m.T);
  m.degenerate.resize(m.T);

  const Scalar c = params.vol_clip;
  Scalar gmin = std::min(daily_log_growth(-c, params), daily_log_growth(c, params));
  Scalar gmax = std::max(daily_log_growth(-c, params), daily_log_growth(c, params));
  const Scalar vstar = std::sqrt(static_cast<Scalar>(params.T));
  if (vstar < c) gmax = std::max(gmax, daily_log_growth(vstar, params));

  const Scalar s = params.row_scale;
  const Scalar lo = s * std::exp(gmin);
  const Scalar hi = s * std::exp(gmax);

  for (int t = 0; t < m.T; ++t) {
    m.degenerate[t] = !(m.eps[t] > 0.0);
    const Scalar mu = m.degenerate[t] ? -c : std::log(m.eps[t]);
    const Scalar sd = m.degenerate[t] ? 0.0 : params.vol_std;
    m.m1[t] = clipped_gaussian_expectation(
        [&](Scalar v) { return std::exp(daily_log_growth(v, params)); }, mu, sd, c);
    m.m2[t] = clipped_gaussian_expectation(
        [&](Scalar v) { return std::exp(2.0 * daily_log_growth(v, params)); }, mu, sd, c);

    // Support bound from the clip range: V entries lie in [lo, hi], E[V] = s m1.
    const Scalar em = s * m.m1[t];
    const Scalar d11 = em - 1.0;
    const Scalar d12 = std::max(hi - em, em - lo);
    const Scalar d22 = std::max(std::abs(lo - 1.0), std::abs(hi - 1.0));
    m.xi[t] = std::sqrt(d11 * d11 + d12 * d12 + d22 * d22);
  }
  return m;
}

Scalar PerturbationMap::factor_scale(const Policy& deploy) const {
  return std::tanh((direction.array() * deploy.full().array()).sum());
}

Matrix PerturbationMap::sample(int t, const Policy& deploy, Rng& rng) const {
  switch (kind) {
    case PerturbationKind::Null:
      return Matrix::Zero(dx, dx);
    case PerturbationKind::ScaledFactor: {
      const double u = rng.uniform01();
      double acc = 0.0;
      std::size_t pick = factor_atoms.size() - 1;
      for (std::size_t k = 0; k < factor_atoms.size(); ++k) {
        acc += factor_probs[k];
        if (u < acc) {
          pick = k;
          break;
        }
      }
      if (amplitude[t] == 0.0) return Matrix::Zero(dx, dx);
      return amplitude[t] * factor_scale(deploy) * factor_atoms[pick];
    }
    case PerturbationKind::StockVolatility: {
      const int L = svol.L;
      Vector factors(L);
      for (int i = 0; i < L; ++i) {
        Scalar v;
        if (degenerate[t]) {
          v = -svol.vol_clip;
          rng.normal();  // keep the draw count schedule-independent
        } else {
          const Scalar raw = std::log(eps[t]) + svol.vol_std * rng.normal();
          v = std::min(svol.vol_clip, std::max(-svol.vol_clip, raw));
        }
        factors(i) = std::exp(daily_log_growth(v, svol));
      }
      const Vector vdiag = deploy.params * factors;  // V_l = sum_i m^{l,i} f_i
      const Scalar em = svol.row_scale * m1[t];
      Matrix delta = Matrix::Zero(dx, dx);
      for (int l = 0; l < L; ++l) {
        delta(l, l) = em - 1.0;
        delta(l, L + l) = vdiag(l) - em;
        delta(L + l, L + l) = vdiag(l) - 1.0;
      }
      return delta;
    }
  }
  throw std::logic_error("unknown perturbation kind");
}

std::vector<std::pair<Matrix, Scalar>> PerturbationMap::support(int t,
                                                                const Policy& deploy) const {
  switch (kind) {
    case PerturbationKind::Null:
      return {{Matrix::Zero(dx, dx), 1.0}};
    case PerturbationKind::ScaledFactor: {
      if (amplitude[t] == 0.0) return {{Matrix::Zero(dx, dx), 1.0}};
      const Scalar scale = amplitude[t] * factor_scale(deploy);
      std::vector<std::pair<Matrix, Scalar>> out;
      out.reserve(factor_atoms.size());
      for (std::size_t k = 0; k < factor_atoms.size(); ++k)
        out.emplace_back(scale * factor_atoms[k], factor_probs[k]);
      return out;
    }
    case PerturbationKind::StockVolatility:
      throw std::invalid_argument("stock volatility map has no finite support");
  }
  throw std::logic_error("unknown perturbation kind");
}

Matrix PerturbationMap::mean(int t, const Policy& deploy) const {
  switch (kind) {
    case PerturbationKind::Null:
    case PerturbationKind::ScaledFactor:
      return Matrix::Zero(dx, dx);
    case PerturbationKind::StockVolatility: {
      (void)deploy;
      const int L = svol.L;
      const Scalar em = svol.row_scale * m1[t];
      Matrix d = Matrix::Zero(dx, dx);
      for (int l = 0; l < L; ++l) {
        d(l, l) = em - 1.0;
        d(L + l, L + l) = em - 1.0;
      }
      return d;
    }
  }
  throw std::logic_error("unknown perturbation kind");
}

namespace {

// Stock Delta decomposes as C0 + R(V) with R = [[0, V], [0, V]] and
// C0 = [[(s m1 - 1) I, -s m1 I], [0, -I]]; second moments of the diagonal V
// reduce to a Hadamard product with E[V_l V_k].
struct StockMoments {
  Matrix c0;
  Matrix er;       // E[R]
  Matrix evv;      // E[V_l V_k] as an L x L matrix
  int L = 0;
};

StockMoments stock_moments(const PerturbationMap& map, int t, const Policy& deploy) {
  const int L = map.svol.L;
  const Scalar s = map.svol.row_scale;
  const Scalar em = s * map.m1[t];
  StockMoments sm;
  sm.L = L;
  sm.c0 = Matrix::Zero(2 * L, 2 * L);
  sm.er = Matrix::Zero(2 * L, 2 * L);
  for (int l = 0; l < L; ++l) {
    sm.c0(l, l) = em - 1.0;
    sm.c0(l, L + l) = -em;
    sm.c0(L + l, L + l) = -1.0;
    sm.er(l, L + l) = em;
    sm.er(L + l, L + l) = em;
  }
  const Matrix& P = deploy.params;
  const Scalar var_f = map.m2[t] - map.m1[t] * map.m1[t];
  sm.evv = var_f * (P * P.transpose()).array() + em * em;
  return sm;
}

Matrix hadamard_vyv(const Matrix& Y, const Matrix& evv) {
  // E[V Y V^T] for diagonal random V: entrywise Y .* E[V_l V_k]
  return Y.cwiseProduct(evv);
}

}  // namespace

Matrix PerturbationMap::e_delta_x_deltaT(int t, const Policy& deploy, const Matrix& X) const {
  switch (kind) {
    case PerturbationKind::Null:
      return Matrix::Zero(dx, dx);
    case PerturbationKind::ScaledFactor: {
      if (amplitude[t] == 0.0) return Matrix::Zero(dx, dx);
      const Scalar scale = amplitude[t] * factor_scale(deploy);
      Matrix acc = Matrix::Zero(dx, dx);
      for (std::size_t k = 0; k < factor_atoms.size(); ++k)
        acc += factor_probs[k] * factor_atoms[k] * X * factor_atoms[k].transpose();
      return scale * scale * acc;
    }
    case PerturbationKind::StockVolatility: {
      const StockMoments sm = stock_moments(*this, t, deploy);
      const int L = sm.L;
      Matrix acc = sm.c0 * X * sm.c0.transpose();
      acc += sm.c0 * X * sm.er.transpose();
      acc += sm.er * X * sm.c0.transpose();
      // E[R X R^T]: all four blocks equal E[V X22 V^T]
      const Matrix vq = hadamard_vyv(X.bottomRightCorner(L, L), sm.evv);
      acc.topLeftCorner(L, L) += vq;
      acc.topRightCorner(L, L) += vq;
      acc.bottomLeftCorner(L, L) += vq;
      acc.bottomRightCorner(L, L) += vq;
      return acc;
    }
  }
  throw std::logic_error("unknown perturbation kind");
}

Matrix PerturbationMap::e_deltaT_x_delta(int t, const Policy& deploy, const Matrix& X) const {
  switch (kind) {
    case PerturbationKind::Null:
      return Matrix::Zero(dx, dx);
    case PerturbationKind::ScaledFactor: {
      if (amplitude[t] == 0.0) return Matrix::Zero(dx, dx);
      const Scalar scale = amplitude[t] * factor_scale(deploy);
      Matrix acc = Matrix::Zero(dx, dx);
      for (std::size_t k = 0; k < factor_atoms.size(); ++k)
        acc += factor_probs[k] * factor_atoms[k].transpose() * X * factor_atoms[k];
      return scale * scale * acc;
    }
    case PerturbationKind::StockVolatility: {
      const StockMoments sm = stock_moments(*this, t, deploy);
      const int L = sm.L;
      Matrix acc = sm.c0.transpose() * X * sm.c0;
      acc += sm.c0.transpose() * X * sm.er;
      acc += sm.er.transpose() * X * sm.c0;
      // E[R^T X R]: only the bottom-right block, E[V (X11+X12+X21+X22) V^T]
      const Matrix xsum = X.topLeftCorner(L, L) + X.topRightCorner(L, L) +
                          X.bottomLeftCorner(L, L) + X.bottomRightCorner(L, L);
      acc.bottomRightCorner(L, L) += hadamard_vyv(xsum, sm.evv);
      return acc;
    }
  }
  throw std::logic_error("unknown perturbation kind");
}

void PerturbationMap::validate() const {
  if (static_cast<int>(eps.size()) != T || static_cast<int>(xi.size()) != T)
    throw std::invalid_argument("schedule lengths must equal T");
  for (Scalar e : eps)
    if (e < 0.0) throw std::invalid_argument("eps must be nonnegative");
  for (Scalar x : xi)
    if (x < 0.0) throw std::invalid_argument("xi must be nonnegative");
  if (kind == PerturbationKind::ScaledFactor) {
    Scalar total = 0.0;
    Matrix mean_u = Matrix::Zero(dx, dx);
    for (std::size_t k = 0; k < factor_atoms.size(); ++k) {
      total += factor_probs[k];
      mean_u += factor_probs[k] * factor_atoms[k];
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("factor probabilities must sum to 1");
    if (mean_u.norm() > 1e-12)
      throw std::invalid_argument("factor distribution must be zero-mean");
  }
}

}  // namespace perfctl
