#include "perfctl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace perfctl {

Policy Policy::dense(const Matrix& m, int H, FeasibleSet set) {
  Policy p;
  if (H < 1) throw std::invalid_argument("H must be >= 1");
  if (m.cols() % H != 0) throw std::invalid_argument("columns must be H * dx");
  p.params = m;
  p.H = H;
  p.du = static_cast<int>(m.rows());
  p.dx = static_cast<int>(m.cols()) / H;
  p.layout = PolicyLayout::Dense;
  p.set = set;
  return p;
}

Policy Policy::stock(const Matrix& portfolio, FeasibleSet set) {
  if (portfolio.rows() != portfolio.cols())
    throw std::invalid_argument("portfolio block must be square");
  Policy p;
  p.params = portfolio;
  p.H = 1;
  p.du = 2 * static_cast<int>(portfolio.rows());
  p.dx = p.du;
  p.layout = PolicyLayout::StockBlockDiag;
  p.set = set;
  return p;
}

Matrix Policy::full() const {
  if (layout == PolicyLayout::Dense) return params;
  const int L = static_cast<int>(params.rows());
  Matrix m = Matrix::Zero(2 * L, 2 * L);
  m.topLeftCorner(L, L) = params;
  m.bottomRightCorner(L, L) = params;
  return m;
}

Matrix Policy::block(int i) const {
  if (i < 1 || i > H) throw std::invalid_argument("block index out of range");
  return full().middleCols(static_cast<Eigen::Index>(i - 1) * dx, dx);
}

Matrix Policy::collapse(const Matrix& grad_full) const {
  if (grad_full.rows() != du || grad_full.cols() != static_cast<Eigen::Index>(H) * dx)
    throw std::invalid_argument("gradient shape mismatch");
  if (layout == PolicyLayout::Dense) return grad_full;
  const int L = static_cast<int>(params.rows());
  return grad_full.topLeftCorner(L, L) + grad_full.bottomRightCorner(L, L);
}

Scalar Policy::m_bar() const {
  Scalar params_bound = 0.0;
  switch (set.kind) {
    case FeasibleKind::FrobeniusBall:
      params_bound = set.value;
      break;
    case FeasibleKind::RowSimplex:
      // each row attains at most ||row||_2 = scale at a vertex
      params_bound = set.value * std::sqrt(static_cast<Scalar>(params.rows()));
      break;
  }
  return layout == PolicyLayout::Dense ? params_bound : std::sqrt(2.0) * params_bound;
}

bool Policy::is_feasible(Scalar tol) const {
  switch (set.kind) {
    case FeasibleKind::FrobeniusBall:
      return params.norm() <= set.value + tol;
    case FeasibleKind::RowSimplex:
      for (Eigen::Index r = 0; r < params.rows(); ++r) {
        if (params.row(r).minCoeff() < -tol) return false;
        if (std::abs(params.row(r).sum() - set.value) > tol) return false;
      }
      return true;
  }
  return false;
}

Vector project_row_simplex(const Vector& row, Scalar scale) {
  const Eigen::Index n = row.size();
  // already feasible points are fixed points, bitwise
  if (row.minCoeff() >= 0.0 &&
      std::abs(row.sum() - scale) <= 1e-13 * std::max<Scalar>(1.0, scale))
    return row;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (row(a) != row(b)) return row(a) > row(b);
    return a < b;
  });

  Scalar cumsum = 0.0;
  Scalar tau = 0.0;
  int k = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumsum += row(order[j]);
    const Scalar cand = (cumsum - scale) / static_cast<Scalar>(j + 1);
    if (row(order[j]) - cand > 0.0) {
      tau = cand;
      k = static_cast<int>(j + 1);
    }
  }
  (void)k;

  Vector out = (row.array() - tau).cwiseMax(0.0).matrix();
  const Scalar s = out.sum();
  if (s > 0.0) out *= scale / s;
  return out;
}

Matrix project_params(const Matrix& raw, const FeasibleSet& set) {
  switch (set.kind) {
    case FeasibleKind::FrobeniusBall: {
      const Scalar n = raw.norm();
      if (n <= set.value * (1.0 + 1e-14)) return raw;
      return raw * (set.value / n);
    }
    case FeasibleKind::RowSimplex: {
      Matrix out = raw;
      for (Eigen::Index r = 0; r < raw.rows(); ++r)
        out.row(r) = project_row_simplex(raw.row(r).transpose(), set.value).transpose();
      return out;
    }
  }
  throw std::logic_error("unknown feasible set");
}

Policy project_policy(const Policy& policy, const Matrix& raw) {
  Policy out = policy;
  out.params = project_params(raw, policy.set);
  return out;
}

}  // namespace perfctl
