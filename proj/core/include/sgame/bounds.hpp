#pragma once

#include <optional>
#include <stdexcept>

#include "sgame/types.hpp"

namespace sgame {

/// Problem sizes plus the box constants, as consumed by the closed-form
/// risk bounds. `kappa` below 148 leaves the regime the guarantees were
/// stated for; callers opting in must say so explicitly.
struct BoundInputs {
  int n = 2;
  int p = 1;
  int q = 1;
  ParameterBounds bounds;
  double kappa = 148.0;

  void validate(bool allow_small_kappa = false) const {
    bounds.validate();
    if (n < 2) throw std::invalid_argument("BoundInputs: need n >= 2");
    if (p < 1 || q < 1) throw std::invalid_argument("BoundInputs: need p, q >= 1");
    if (!allow_small_kappa && kappa < 148.0)
      throw std::invalid_argument("BoundInputs: kappa must be >= 148 (pass allow_small_kappa to override)");
    if (!(kappa > 0.0)) throw std::invalid_argument("BoundInputs: kappa must be positive");
  }
};

/// Response truncation level M_n = A_beta + sqrt(A_beta^2 + 4*A_Sigma*ln n):
/// the positive root of X(X - 2*A_beta)/(4*A_Sigma) = ln n, so that
/// exp(-(M_n^2 - 2*M_n*A_beta)/(4*A_Sigma)) * sqrt(n) = 1/sqrt(n).
double truncation_level_mn(int n, const ParameterBounds& bounds);
double truncation_level_mn_logn(double log_n, const ParameterBounds& bounds);

/// Deviation envelope at truncation level m_n:
/// B_n = max(A_Sigma, 1 + K*A_G) * (1 + q*sqrt(q)*(m_n + A_beta)^2 * A_Sigma).
/// Equals gradient_envelope(m_n) for the same box.
double envelope_bn(double m_n, const ParameterBounds& bounds, int q);

/// Explicit-in-n upper bound on B_n at m_n = M_n:
/// B'_n = max(A_Sigma, 1 + K*A_G) * (1 + 2*q*sqrt(q)*A_Sigma*(5*A_beta^2 + 4*A_Sigma*ln n)).
double envelope_bn_prime(int n, const ParameterBounds& bounds, int q);
double envelope_bn_prime_logn(double log_n, const ParameterBounds& bounds, int q);

/// Smallest regularization strength the oracle guarantee asks for:
/// kappa * K * B'_n / sqrt(n) * (q * ln n * sqrt(ln(2p+1)) + 1).
/// Requires kappa >= 148 unless `allow_small_kappa`.
double lambda_lower_bound(const BoundInputs& in, bool allow_small_kappa = false);

/// The same threshold in its pre-simplification form,
/// kappa0 * 4*K*B_n/sqrt(n) * (37*q*ln n*sqrt(ln(2p+1)) + 1), kappa0 >= 1.
/// Folding 4*37*kappa0 into one constant recovers lambda_lower_bound.
double lambda_lower_bound_unfolded(const BoundInputs& in, double kappa0, double b_n);

/// Complexity offset of the l1-ball of radius m:
/// Delta_m = m*sqrt(ln(2p+1))*ln n + 2*sqrt(K)*(A_gamma + q*A_beta + q*sqrt(q)/a_Sigma).
double delta_m(int m, int p, int n, const ParameterBounds& bounds, int q);

/// Uniform bound on truncated log-ratios:
/// R_n = 2*K*B_n*(A_gamma + q*A_beta + q*sqrt(q)/a_Sigma).
double sup_log_ratio_rn(const ParameterBounds& bounds, int q, double b_n);

/// Natural log of the delta-packing bound for the radius-m log-ratio class:
/// (72*B_n^2*q^2*K^2*m^2/delta^2)*ln(2p+1)
///   + K*[ln(1 + 18*B_n*K*q*A_beta/delta) + ln(1 + 18*B_n*K*A_gamma/delta)
///        + ln(1 + 18*B_n*K*q*sqrt(q)/(a_Sigma*delta))].
/// Kept in log scale; the direct-scale product overflows quickly.
double log_packing_bound(double delta, int m, double b_n, int p, int q,
                         const ParameterBounds& bounds);

/// Probability that some response exceeds the truncation level:
/// P <= 2*K*n*q*A_gamma * exp(-(m_n^2 - 2*m_n*A_beta)/(2*A_Sigma)),
/// implemented exactly as printed (including the A_gamma factor).
double response_tail_bound(double m_n, int n, const ParameterBounds& bounds, int q);

/// Chernoff bound on the unit-variance Gaussian upper tail: exp(-t^2/2).
double chernoff_gaussian_tail(double t);

/// Right-hand side of the oracle risk inequality, split into its summands:
///   oracle_term    = (1 + 1/kappa) * (kl_inf_term + lambda * l1_norm_psi0)
///   lambda_term    = lambda
///   tail_term      = sqrt(K/n) * (e^{q/2-1} pi^{q/2} / A_Sigma^{q/2} + H_s0) * sqrt(2*q*A_gamma)
///   deviation_term = 302*q*sqrt(K/n) * B'_n * K * (1 + (A_gamma + q*A_beta + q*sqrt(q)/a_Sigma)^2)
/// `total` is their exact sum. Throws when lambda is below lambda_lower_bound.
struct OracleRhs {
  double total = 0.0;
  double oracle_term = 0.0;
  double lambda_term = 0.0;
  double tail_term = 0.0;
  double deviation_term = 0.0;
};
OracleRhs oracle_risk_rhs(double kl_inf_term, double l1_norm_psi0, const BoundInputs& in,
                          double lambda, bool allow_small_kappa = false);

}  // namespace sgame
