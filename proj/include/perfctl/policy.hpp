#pragma once

#include <stdexcept>

#include "perfctl/types.hpp"

namespace perfctl {

enum class FeasibleKind { FrobeniusBall, RowSimplex };

//! Feasible-set descriptor for the policy parameter matrix. FrobeniusBall
//! bounds ||M||_F by `radius`; RowSimplex constrains every row to be
//! entrywise nonnegative with entries summing to `scale`.
struct FeasibleSet {
  FeasibleKind kind = FeasibleKind::FrobeniusBall;
  Scalar value = 1.0;  // radius or row scale

  static FeasibleSet ball(Scalar radius) { return {FeasibleKind::FrobeniusBall, radius}; }
  static FeasibleSet simplex(Scalar scale) { return {FeasibleKind::RowSimplex, scale}; }
};

enum class PolicyLayout {
  Dense,           // parameter matrix is the full du x (H dx) block matrix
  StockBlockDiag,  // params P is L x L, expanded to [[P,0],[0,P]] (H = 1)
};

//! Disturbance-action policy M = [M^(1) ... M^(H)].
//!
//! `params` is the optimization variable; for the Dense layout it equals the
//! full matrix, for StockBlockDiag it is the L x L portfolio block shared by
//! both diagonal positions of the 2L x 2L control matrix.
struct Policy {
  Matrix params;
  int H = 1;
  int du = 0;
  int dx = 0;
  PolicyLayout layout = PolicyLayout::Dense;
  FeasibleSet set;

  static Policy dense(const Matrix& m, int H, FeasibleSet set);
  static Policy stock(const Matrix& portfolio, FeasibleSet set);

  //! Full du x (H dx) control matrix.
  Matrix full() const;
  //! i-th H-block M^(i), 1 <= i <= H, each du x dx.
  Matrix block(int i) const;
  //! Chain rule from a gradient w.r.t. the full matrix onto `params`.
  Matrix collapse(const Matrix& grad_full) const;
  //! sup of ||full()||_F over the feasible set (the bound M in Lemma 1).
  Scalar m_bar() const;
  bool is_feasible(Scalar tol = 1e-12) const;
};

//! Euclidean projection of a raw parameter matrix onto the feasible set.
//! RowSimplex uses the sorting algorithm with stable value-then-index
//! tie-breaking; rows are renormalized afterwards so feasibility holds
//! exactly rather than to rounding.
Matrix project_params(const Matrix& raw, const FeasibleSet& set);

//! Convenience: returns the policy with params replaced by the projection.
Policy project_policy(const Policy& policy, const Matrix& raw);

//! Projection of a single row onto {v >= 0, sum v = scale}.
Vector project_row_simplex(const Vector& row, Scalar scale);

}  // namespace perfctl
