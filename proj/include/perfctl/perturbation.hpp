#pragma once

#include <functional>
#include <vector>

#include "perfctl/policy.hpp"
#include "perfctl/rng.hpp"
#include "perfctl/types.hpp"

namespace perfctl {

enum class PerturbationKind { Null, ScaledFactor, StockVolatility };

//! Parameters of the stock-market volatility perturbation: per-stock
//! volatilities are clipped Gaussians centered at log(eps_t) and enter the
//! daily growth factor exp((r - v^2/2)/T + v/sqrt(T)).
struct StockVolParams {
  int L = 1;
  int T = 1;
  Scalar r = 0.02;
  Scalar vol_std = 0.2;
  Scalar vol_clip = 0.6;
  Scalar row_scale = 1.0;  // feasible-set row sum of the portfolio block
};

//! E[f(v)] and related moments for v = clip(N(mean, std), +-clip).
Scalar clipped_gaussian_expectation(const std::function<Scalar(Scalar)>& f, Scalar mean,
                                    Scalar std_dev, Scalar clip);

//! Policy-dependent distribution family {D_t(M)} for the transition
//! perturbation Delta_t. Every sample satisfies ||Delta_t|| <= xi_t and the
//! declared eps_t is a valid Wasserstein-1 Lipschitz constant for the
//! ScaledFactor family by the identity coupling.
struct PerturbationMap {
  PerturbationKind kind = PerturbationKind::Null;
  int dx = 1;
  int T = 1;
  std::vector<Scalar> eps;  // declared sensitivities, t = 0..T-1
  std::vector<Scalar> xi;   // support bounds, t = 0..T-1

  // ScaledFactor: Delta_t(M) = a_t * tanh(tr(P^T M)) * U_t
  std::vector<Scalar> amplitude;
  Matrix direction;                 // P, unit Frobenius norm, shape of full M
  std::vector<Matrix> factor_atoms; // zero-mean U support
  std::vector<Scalar> factor_probs;

  // StockVolatility
  StockVolParams svol;
  std::vector<Scalar> m1;  // E[exp(g(v_t))] per step, quadrature-cached
  std::vector<Scalar> m2;  // E[exp(2 g(v_t))]
  std::vector<bool> degenerate;  // eps_t = 0: v pinned at -vol_clip

  static PerturbationMap null_map(int dx, int T);
  static PerturbationMap scaled_factor(int T, std::vector<Scalar> amplitude, Matrix direction,
                                       std::vector<Matrix> atoms, std::vector<Scalar> probs);
  static PerturbationMap stock_volatility(const StockVolParams& params,
                                          std::vector<Scalar> schedule);

  Matrix sample(int t, const Policy& deploy, Rng& rng) const;
  bool finite_support() const { return kind != PerturbationKind::StockVolatility; }
  std::vector<std::pair<Matrix, Scalar>> support(int t, const Policy& deploy) const;

  Matrix mean(int t, const Policy& deploy) const;
  //! E[Delta X Delta^T] under D_t(deploy), exact.
  Matrix e_delta_x_deltaT(int t, const Policy& deploy, const Matrix& X) const;
  //! E[Delta^T X Delta] under D_t(deploy), exact.
  Matrix e_deltaT_x_delta(int t, const Policy& deploy, const Matrix& X) const;

  //! Scalar factor tanh(tr(P^T M_full)) used by the ScaledFactor family.
  Scalar factor_scale(const Policy& deploy) const;

  void validate() const;
};

}  // namespace perfctl
