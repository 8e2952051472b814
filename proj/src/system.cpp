#include "perfctl/system.hpp"

#include <Eigen/Eigenvalues>
#include <complex>
#include <stdexcept>

namespace perfctl {

std::vector<std::string> SystemConfig::validate() const {
  if (dx < 1 || du < 1) throw std::invalid_argument("dimensions must be >= 1");
  if (A.rows() != dx || A.cols() != dx) throw std::invalid_argument("A must be dx x dx");
  if (B.rows() != dx || B.cols() != du) throw std::invalid_argument("B must be dx x du");
  if (K.rows() != du || K.cols() != dx) throw std::invalid_argument("K must be du x dx");
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  if (H < 1 || H >= T) throw std::invalid_argument("H must satisfy 1 <= H < T");
  if (!(W > 0.0)) throw std::invalid_argument("W must be > 0");
  if (x0_bound < 0.0) throw std::invalid_argument("x0 bound must be >= 0");
  if (kappa < 1.0) throw std::invalid_argument("kappa must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must be in (0,1)");
  if (sigma2 < 0.0) throw std::invalid_argument("sigma2 must be >= 0");

  std::vector<std::string> notes;
  if (sigma2 == 0.0) notes.push_back("noise covariance floor is zero (A1 lower bound violated)");
  return notes;
}

namespace {

StabilityCertificate evaluate_pair(const SystemConfig& config, const Matrix& Q, const Matrix& L) {
  StabilityCertificate cert;
  cert.Q = Q;
  cert.L = L;
  Eigen::FullPivLU<Matrix> lu(Q);
  if (!lu.isInvertible()) throw std::invalid_argument("certificate Q is singular");
  const Matrix Qinv = lu.inverse();
  cert.norm_K = spectral_norm(config.K);
  cert.norm_L = spectral_norm(L);
  cert.norm_Q = spectral_norm(Q);
  cert.norm_Qinv = spectral_norm(Qinv);
  cert.residual = spectral_norm(config.a_tilde() - Q * L * Qinv);
  const bool ok = cert.norm_K <= config.kappa && cert.norm_L <= 1.0 - config.gamma &&
                  cert.norm_Q <= config.kappa && cert.norm_Qinv <= config.kappa &&
                  cert.residual <= 1e-8;
  cert.verdict = ok ? StabilityVerdict::CertifiedStronglyStable : StabilityVerdict::NotCertified;
  return cert;
}

// Real block-diagonal factorization from the complex eigendecomposition:
// conjugate pairs become 2x2 rotation-scaled blocks, columns scaled to unit
// norm to keep ||Q|| and ||Q^{-1}|| balanced.
bool real_eigen_factorization(const Matrix& a, Matrix& Q, Matrix& L) {
  const int n = static_cast<int>(a.rows());
  Eigen::EigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) return false;
  const auto& vals = es.eigenvalues();
  const auto& vecs = es.eigenvectors();

  Q = Matrix::Zero(n, n);
  L = Matrix::Zero(n, n);
  std::vector<bool> used(n, false);
  int col = 0;
  for (int i = 0; i < n; ++i) {
    if (used[i]) continue;
    const std::complex<double> lam = vals(i);
    if (std::abs(lam.imag()) < 1e-14) {
      Vector v = vecs.col(i).real();
      const double nv = v.norm();
      if (nv < 1e-14) return false;
      Q.col(col) = v / nv;
      L(col, col) = lam.real();
      used[i] = true;
      ++col;
    } else {
      int j = -1;
      for (int k = i + 1; k < n; ++k) {
        if (!used[k] && std::abs(vals(k).real() - lam.real()) < 1e-10 &&
            std::abs(vals(k).imag() + lam.imag()) < 1e-10) {
          j = k;
          break;
        }
      }
      if (j < 0) return false;
      Vector re = vecs.col(i).real();
      Vector im = vecs.col(i).imag();
      const double nr = re.norm(), ni = im.norm();
      if (nr < 1e-14 || ni < 1e-14) return false;
      const double s = std::sqrt(std::max(nr, ni) * std::min(nr, ni));
      Q.col(col) = re / s;
      Q.col(col + 1) = im / s;
      L(col, col) = lam.real();
      L(col, col + 1) = lam.imag();
      L(col + 1, col) = -lam.imag();
      L(col + 1, col + 1) = lam.real();
      used[i] = true;
      used[j] = true;
      col += 2;
    }
  }
  return col == n;
}

}  // namespace

StabilityCertificate check_strong_stability(const SystemConfig& config,
                                            const std::optional<Matrix>& Q,
                                            const std::optional<Matrix>& L) {
  if (Q.has_value() != L.has_value())
    throw std::invalid_argument("Q and L must be supplied together");
  if (Q.has_value()) return evaluate_pair(config, *Q, *L);

  const Matrix a = config.a_tilde();

  // Trivial factorization first: it is exact and orthogonal.
  {
    StabilityCertificate cert = evaluate_pair(config, Matrix::Identity(config.dx, config.dx), a);
    if (cert.verdict == StabilityVerdict::CertifiedStronglyStable) return cert;
  }

  Matrix Qc, Lc;
  if (real_eigen_factorization(a, Qc, Lc)) {
    Eigen::FullPivLU<Matrix> lu(Qc);
    if (lu.isInvertible()) {
      StabilityCertificate cert = evaluate_pair(config, Qc, Lc);
      if (cert.verdict == StabilityVerdict::CertifiedStronglyStable) return cert;
      // Construction exists but some norm condition fails for the declared
      // (kappa, gamma): the spectral obstruction is genuine.
      return cert;
    }
  }

  // Defective matrix: no diagonalizing construction, fall back to the
  // user-declared constants.
  StabilityCertificate cert;
  cert.verdict = StabilityVerdict::DeclaredOnly;
  cert.norm_K = spectral_norm(config.K);
  return cert;
}

std::pair<Scalar, Scalar> alpha_beta(Scalar gamma, Scalar kappa,
                                     const std::vector<Scalar>& xi, int t) {
  Scalar alpha = 1.0;
  Scalar beta = 0.0;
  for (int i = 0; i < t; ++i) {
    const Scalar xi_i = i < static_cast<int>(xi.size()) ? xi[i] : 0.0;
    const Scalar zeta = 1.0 - gamma + kappa * kappa * xi_i;
    alpha *= zeta;
    beta = beta * zeta + 1.0;
  }
  return {alpha, beta};
}

void alpha_beta_schedules(Scalar gamma, Scalar kappa, const std::vector<Scalar>& xi,
                          int T, std::vector<Scalar>& alpha, std::vector<Scalar>& beta) {
  alpha.assign(T + 1, 1.0);
  beta.assign(T + 1, 0.0);
  for (int t = 0; t < T; ++t) {
    const Scalar xi_t = t < static_cast<int>(xi.size()) ? xi[t] : 0.0;
    const Scalar zeta = 1.0 - gamma + kappa * kappa * xi_t;
    alpha[t + 1] = alpha[t] * zeta;
    beta[t + 1] = beta[t] * zeta + 1.0;
  }
}

Scalar state_norm_bound(const SystemConfig& config, Scalar m_bar,
                        const std::vector<Scalar>& xi, int t) {
  const auto [alpha, beta] = alpha_beta(config.gamma, config.kappa, xi, t);
  const Scalar k2 = config.kappa * config.kappa;
  const Scalar bn = spectral_norm(config.B);
  return config.x0_bound * k2 * alpha + k2 * config.W * (bn * config.H * m_bar + 1.0) * beta;
}

}  // namespace perfctl
