#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "perfctl/types.hpp"

namespace perfctl {

//! Static description of the controlled linear system.
//!
//! Dynamics: x_{t+1} = (A + Delta_t) x_t + B u_t + w_t with the
//! disturbance-action policy u_t = -K x_t + M [w_{t-1}; ...; w_{t-H}].
struct SystemConfig {
  int dx = 0;       // state dimension
  int du = 0;       // action dimension
  Matrix A;         // dx x dx mean transition
  Matrix B;         // dx x du input gain
  Matrix K;         // du x dx linear feedback
  int T = 1;        // horizon
  int H = 1;        // policy memory, 1 <= H < T
  Scalar W = 1.0;   // noise norm bound
  Scalar x0_bound = 0.0;
  Scalar sigma2 = 1.0;  // noise covariance floor; 0 flags an A1 violation
  Scalar kappa = 1.0;   // >= 1
  Scalar gamma = 0.5;   // in (0, 1)

  Matrix a_tilde() const { return A - B * K; }

  //! Throws std::invalid_argument on structural violations; returns the list
  //! of soft assumption violations (zero noise floor etc.) for reporting.
  std::vector<std::string> validate() const;
};

enum class StabilityVerdict { CertifiedStronglyStable, DeclaredOnly, NotCertified };

struct StabilityCertificate {
  StabilityVerdict verdict = StabilityVerdict::NotCertified;
  std::optional<Matrix> Q;
  std::optional<Matrix> L;
  Scalar residual = 0.0;     // ||A - BK - Q L Q^{-1}||
  Scalar norm_K = 0.0;
  Scalar norm_L = 0.0;
  Scalar norm_Q = 0.0;
  Scalar norm_Qinv = 0.0;
};

//! Validates (Q, L) against the (kappa, gamma) strong-stability conditions,
//! or attempts an eigendecomposition-based construction when absent.
//! Defective or norm-violating cases degrade to DeclaredOnly / NotCertified.
StabilityCertificate check_strong_stability(const SystemConfig& config,
                                            const std::optional<Matrix>& Q = std::nullopt,
                                            const std::optional<Matrix>& L = std::nullopt);

//! alpha_t = prod_{i<t}(1 - gamma + kappa^2 xi_i), beta_t its summed tail
//! products; alpha_0 = 1 and beta_0 = 0 by the empty product/sum convention.
std::pair<Scalar, Scalar> alpha_beta(Scalar gamma, Scalar kappa,
                                     const std::vector<Scalar>& xi, int t);

//! Full schedules alpha_0..alpha_T, beta_0..beta_T via the recurrences
//! alpha_{t+1} = alpha_t zeta_t, beta_{t+1} = beta_t zeta_t + 1.
void alpha_beta_schedules(Scalar gamma, Scalar kappa, const std::vector<Scalar>& xi,
                          int T, std::vector<Scalar>& alpha, std::vector<Scalar>& beta);

//! x0 kappa^2 alpha_t + kappa^2 W (||B|| H Mbar + 1) beta_t.
Scalar state_norm_bound(const SystemConfig& config, Scalar m_bar,
                        const std::vector<Scalar>& xi, int t);

}  // namespace perfctl
