#include "perfctl/noise.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace perfctl {

NoiseModel NoiseModel::zero(int dim) {
  NoiseModel m;
  m.kind = NoiseKind::ZeroNoise;
  m.dim = dim;
  return m;
}

NoiseModel NoiseModel::uniform_box(const Vector& lo, const Vector& hi) {
  if (lo.size() != hi.size()) throw std::invalid_argument("uniform box bounds mismatch");
  NoiseModel m;
  m.kind = NoiseKind::UniformBox;
  m.dim = static_cast<int>(lo.size());
  m.lo = lo;
  m.hi = hi;
  return m;
}

NoiseModel NoiseModel::discrete(std::vector<Vector> atoms, std::vector<Scalar> probs) {
  if (atoms.empty() || atoms.size() != probs.size())
    throw std::invalid_argument("discrete support needs matching atoms and probabilities");
  NoiseModel m;
  m.kind = NoiseKind::DiscreteSupport;
  m.dim = static_cast<int>(atoms.front().size());
  m.atoms = std::move(atoms);
  m.probs = std::move(probs);
  return m;
}

NoiseModel NoiseModel::stacked_uniform(int L, Scalar lo, Scalar hi) {
  NoiseModel m;
  m.kind = NoiseKind::StackedShifted;
  m.dim = 2 * L;
  m.lo = Vector::Constant(L, lo);
  m.hi = Vector::Constant(L, hi);
  return m;
}

Vector NoiseModel::sample(Rng& rng) const {
  switch (kind) {
    case NoiseKind::ZeroNoise:
      return Vector::Zero(dim);
    case NoiseKind::UniformBox:
      return rng.uniform_vector(lo, hi);
    case NoiseKind::DiscreteSupport: {
      const double u = rng.uniform01();
      double acc = 0.0;
      for (std::size_t k = 0; k < atoms.size(); ++k) {
        acc += probs[k];
        if (u < acc) return atoms[k];
      }
      return atoms.back();
    }
    case NoiseKind::StackedShifted: {
      const Vector w = rng.uniform_vector(lo, hi);
      const Vector m = 0.5 * (lo + hi);
      Vector out(dim);
      out.head(dim / 2) = w - m;
      out.tail(dim / 2) = w;
      return out;
    }
  }
  throw std::logic_error("unknown noise kind");
}

Vector NoiseModel::mean() const {
  switch (kind) {
    case NoiseKind::ZeroNoise:
      return Vector::Zero(dim);
    case NoiseKind::UniformBox:
      return 0.5 * (lo + hi);
    case NoiseKind::DiscreteSupport: {
      Vector m = Vector::Zero(dim);
      for (std::size_t k = 0; k < atoms.size(); ++k) m += probs[k] * atoms[k];
      return m;
    }
    case NoiseKind::StackedShifted: {
      Vector m = Vector::Zero(dim);
      m.tail(dim / 2) = 0.5 * (lo + hi);
      return m;
    }
  }
  throw std::logic_error("unknown noise kind");
}

Matrix NoiseModel::second_moment() const {
  const Vector mu = mean();
  switch (kind) {
    case NoiseKind::ZeroNoise:
      return Matrix::Zero(dim, dim);
    case NoiseKind::UniformBox: {
      Matrix cov = Matrix::Zero(dim, dim);
      for (int i = 0; i < dim; ++i) {
        const Scalar span = hi(i) - lo(i);
        cov(i, i) = span * span / 12.0;
      }
      return cov + mu * mu.transpose();
    }
    case NoiseKind::DiscreteSupport: {
      Matrix s = Matrix::Zero(dim, dim);
      for (std::size_t k = 0; k < atoms.size(); ++k)
        s += probs[k] * atoms[k] * atoms[k].transpose();
      return s;
    }
    case NoiseKind::StackedShifted: {
      const int L = dim / 2;
      Matrix covw = Matrix::Zero(L, L);
      for (int i = 0; i < L; ++i) {
        const Scalar span = hi(i) - lo(i);
        covw(i, i) = span * span / 12.0;
      }
      Matrix cov = Matrix::Zero(dim, dim);
      cov.topLeftCorner(L, L) = covw;
      cov.topRightCorner(L, L) = covw;
      cov.bottomLeftCorner(L, L) = covw;
      cov.bottomRightCorner(L, L) = covw;
      return cov + mu * mu.transpose();
    }
  }
  throw std::logic_error("unknown noise kind");
}

Scalar NoiseModel::sigma2() const {
  const Vector mu = mean();
  const Matrix cov = second_moment() - mu * mu.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  const Scalar lam = es.eigenvalues().minCoeff();
  return lam > 1e-14 ? lam : 0.0;
}

Scalar NoiseModel::w_bound() const {
  switch (kind) {
    case NoiseKind::ZeroNoise:
      // degenerate support {0}; report a positive bound so configs stay valid
      return 1.0;
    case NoiseKind::UniformBox: {
      Scalar s = 0.0;
      for (int i = 0; i < dim; ++i) {
        const Scalar m = std::max(std::abs(lo(i)), std::abs(hi(i)));
        s += m * m;
      }
      return std::sqrt(s);
    }
    case NoiseKind::DiscreteSupport: {
      Scalar w = 0.0;
      for (const auto& a : atoms) w = std::max(w, a.norm());
      return w;
    }
    case NoiseKind::StackedShifted: {
      Scalar s = 0.0;
      const int L = dim / 2;
      for (int i = 0; i < L; ++i) {
        const Scalar half = 0.5 * (hi(i) - lo(i));
        const Scalar m = std::max(std::abs(lo(i)), std::abs(hi(i)));
        s += half * half + m * m;
      }
      return std::sqrt(s);
    }
  }
  throw std::logic_error("unknown noise kind");
}

bool NoiseModel::finite_support() const {
  return kind == NoiseKind::ZeroNoise || kind == NoiseKind::DiscreteSupport;
}

std::vector<std::pair<Vector, Scalar>> NoiseModel::support() const {
  if (kind == NoiseKind::ZeroNoise) return {{Vector::Zero(dim), 1.0}};
  if (kind == NoiseKind::DiscreteSupport) {
    std::vector<std::pair<Vector, Scalar>> s;
    for (std::size_t k = 0; k < atoms.size(); ++k) s.emplace_back(atoms[k], probs[k]);
    return s;
  }
  throw std::invalid_argument("noise model has no finite support");
}

void NoiseModel::validate() const {
  if (kind == NoiseKind::DiscreteSupport) {
    Scalar total = 0.0;
    for (Scalar p : probs) {
      if (p < 0.0) throw std::invalid_argument("negative probability");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("probabilities must sum to 1 within 1e-12");
    const Scalar w = w_bound();
    for (const auto& a : atoms)
      if (a.norm() > w + 1e-12) throw std::invalid_argument("atom exceeds norm bound");
  }
  if (zero_mean_declared() && mean().norm() > 1e-12)
    throw std::invalid_argument("declared zero-mean kind has nonzero mean");
}

}  // namespace perfctl
