#pragma once

#include <vector>

#include "perfctl/rng.hpp"
#include "perfctl/types.hpp"

namespace perfctl {

enum class NoiseKind { ZeroNoise, UniformBox, DiscreteSupport, StackedShifted };

//! i.i.d. additive disturbance model. Generic kinds are zero-mean as A1
//! requires; StackedShifted is the stock-market construction [w - E w; w]
//! over an entrywise-uniform base, whose mean and covariance floor are
//! reported honestly (nonzero mean, singular covariance).
struct NoiseModel {
  NoiseKind kind = NoiseKind::ZeroNoise;
  int dim = 1;
  Vector lo, hi;                // UniformBox bounds (also the base of StackedShifted)
  std::vector<Vector> atoms;    // DiscreteSupport
  std::vector<Scalar> probs;

  static NoiseModel zero(int dim);
  static NoiseModel uniform_box(const Vector& lo, const Vector& hi);
  static NoiseModel discrete(std::vector<Vector> atoms, std::vector<Scalar> probs);
  //! 2L-dimensional [w - E w; w] with w entrywise Uniform[lo, hi].
  static NoiseModel stacked_uniform(int L, Scalar lo, Scalar hi);

  Vector sample(Rng& rng) const;
  Vector mean() const;
  //! Exact E[w w^T].
  Matrix second_moment() const;
  //! Largest sigma^2 with E[w w^T] - mean mean^T >= sigma^2 I (0 if singular).
  Scalar sigma2() const;
  //! Norm bound W with ||w|| <= W almost surely.
  Scalar w_bound() const;
  bool zero_mean_declared() const { return kind != NoiseKind::StackedShifted; }

  bool finite_support() const;
  //! Atom list for enumeration (ZeroNoise yields the single zero atom).
  std::vector<std::pair<Vector, Scalar>> support() const;

  //! Enforces the declared invariants (probabilities sum to one, declared
  //! zero-mean kinds have exact mean zero, atoms within the norm bound).
  void validate() const;
};

}  // namespace perfctl
