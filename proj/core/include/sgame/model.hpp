#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "sgame/rng.hpp"
#include "sgame/types.hpp"

namespace sgame {

/// Gate probabilities g_k(x) = exp(w_k(x)) / sum_l exp(w_l(x)) with
/// w_k(x) = gamma_{k0} + gamma_k^T x, evaluated with a max shift.
/// Entries are strictly positive and sum to one up to rounding.
Eigen::VectorXd softmax_gates(const GatingParams& gating, const Eigen::VectorXd& x);

/// Per-parameter caches (Cholesky factors, log determinants) for repeated
/// density evaluation against one parameter vector. The referenced params
/// must outlive the cache.
class DensityCache {
 public:
  explicit DensityCache(const SgameParams& psi);

  /// Affine gate scores w_k(x).
  Eigen::VectorXd gate_scores(const Eigen::VectorXd& x) const;

  /// Mean of expert k at x.
  Eigen::VectorXd mean(int k, const Eigen::VectorXd& x) const;

  /// ln g_k(x) + ln phi(y; mean_k(x), Sigma_k) for every k.
  Eigen::VectorXd log_components(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;

  /// ln s_psi(y|x), a log-sum-exp over log_components.
  double log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;

  /// Draw y | x: a categorical gate pick followed by a Gaussian draw
  /// through the expert's lower Cholesky factor.
  Eigen::VectorXd sample(const Eigen::VectorXd& x, Rng& rng) const;

  const SgameParams& params() const { return *psi_; }
  const Eigen::LLT<Eigen::MatrixXd>& llt(int k) const { return llts_[k]; }
  double log_det_cov(int k) const { return log_dets_[k]; }

 private:
  const SgameParams* psi_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> llts_;
  std::vector<double> log_dets_;
};

/// ln s_psi(y|x). Convenience wrapper that builds a one-shot cache.
double log_density(const SgameParams& psi, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// One draw from s_psi(.|x).
Eigen::VectorXd sample(const SgameParams& psi, const Eigen::VectorXd& x, Rng& rng);

/// Length of the flat gradient vector for (K, p, q).
inline int flat_gradient_size(int k, int p, int q) {
  return k + k * p + k * q + k * q * p + k * q * q;
}

/// Analytic gradient of ln s_psi(y|x) with respect to every parameter,
/// flattened in the fixed order
///   [0, K)                      d/d gamma_{k0}
///   [K, K+K*p)                  d/d gamma_{kj}         (k major, j minor)
///   [.., +K*q)                  d/d beta_{k0,z}        (k major, z minor)
///   [.., +K*q*p)                d/d [beta_k]_{z,j}     (k, then z, then j)
///   [.., +K*q*q)                d/d [Sigma_k]_{z1,z2}  (k, then z1, then z2)
/// Covariance entries are treated as q*q free coordinates; the off-diagonal
/// derivative is the matching entry of
///   r_k/2 * (Sigma^{-1} d d^T Sigma^{-1} - Sigma^{-1}),  d = y - mean_k(x).
Eigen::VectorXd log_density_gradient(const SgameParams& psi, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& y);

/// Envelope G on the sup-norm of the log-density gradient over the bounded
/// class:  max(A_Sigma, 1 + K*A_G) * (1 + q*sqrt(q)*(|y|_inf + A_beta)^2 * A_Sigma).
/// Strictly increasing in |y|_inf.
double gradient_envelope(double y_inf_norm, const ParameterBounds& bounds, int q);

/// Smallest feasibility-preserving rescaling into the bounded class:
/// gating rows scaled so |gamma_{k0}| + |gamma_k|_1 <= A_gamma, expert mean
/// rows scaled so |[beta_{k0}]_z| + |[beta_k]_{z,.}|_1 <= A_beta, covariance
/// eigenvalues clipped into [1/A_Sigma, 1/a_Sigma]. Identity (bitwise) on
/// feasible input; idempotent.
SgameParams project_to_bounds(const SgameParams& psi);

/// Throws std::invalid_argument naming the first violated box constraint
/// (gating row, expert mean row, or covariance eigenvalue range).
void require_in_class(const SgameParams& psi, double rtol = 1e-9);

/// l1 norm of the penalized coordinates: gating slopes plus expert mean
/// slopes. Intercepts and covariances are excluded.
double penalized_l1_norm(const SgameParams& psi);

/// lambda * penalized_l1_norm(psi). Throws on negative lambda.
double penalty(const SgameParams& psi, double lambda);

}  // namespace sgame
