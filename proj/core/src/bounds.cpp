#include "sgame/bounds.hpp"

#include <cmath>

#include "sgame/divergence.hpp"

namespace sgame {

namespace {

double q_sqrt_q(int q) { return q * std::sqrt(static_cast<double>(q)); }

double envelope_front(const ParameterBounds& b) {
  return std::max(b.a_sigma_max, 1.0 + b.k * b.gate_upper());
}

// A_gamma + q*A_beta + q*sqrt(q)/a_Sigma, the parameter-scale constant the
// deviation terms share.
double scale_constant(const ParameterBounds& b, int q) {
  return b.a_gamma + q * b.a_beta + q_sqrt_q(q) / b.a_sigma_min;
}

}  // namespace

double truncation_level_mn_logn(double log_n, const ParameterBounds& bounds) {
  bounds.validate();
  const double ab = bounds.a_beta;
  return ab + std::sqrt(ab * ab + 4.0 * bounds.a_sigma_max * log_n);
}

double truncation_level_mn(int n, const ParameterBounds& bounds) {
  if (n < 2) throw std::invalid_argument("truncation_level_mn: need n >= 2");
  return truncation_level_mn_logn(std::log(static_cast<double>(n)), bounds);
}

double envelope_bn(double m_n, const ParameterBounds& bounds, int q) {
  bounds.validate();
  if (!(m_n > 0.0)) throw std::invalid_argument("envelope_bn: m_n must be positive");
  const double span = m_n + bounds.a_beta;
  return envelope_front(bounds) * (1.0 + q_sqrt_q(q) * span * span * bounds.a_sigma_max);
}

double envelope_bn_prime_logn(double log_n, const ParameterBounds& bounds, int q) {
  bounds.validate();
  const double inner = 5.0 * bounds.a_beta * bounds.a_beta + 4.0 * bounds.a_sigma_max * log_n;
  return envelope_front(bounds) * (1.0 + 2.0 * q_sqrt_q(q) * bounds.a_sigma_max * inner);
}

double envelope_bn_prime(int n, const ParameterBounds& bounds, int q) {
  if (n < 2) throw std::invalid_argument("envelope_bn_prime: need n >= 2");
  return envelope_bn_prime_logn(std::log(static_cast<double>(n)), bounds, q);
}

double lambda_lower_bound(const BoundInputs& in, bool allow_small_kappa) {
  in.validate(allow_small_kappa);
  const double log_n = std::log(static_cast<double>(in.n));
  const double bnp = envelope_bn_prime_logn(log_n, in.bounds, in.q);
  const double width = in.q * log_n * std::sqrt(std::log(2.0 * in.p + 1.0)) + 1.0;
  return in.kappa * in.bounds.k * bnp / std::sqrt(static_cast<double>(in.n)) * width;
}

double lambda_lower_bound_unfolded(const BoundInputs& in, double kappa0, double b_n) {
  in.validate(true);
  if (!(kappa0 >= 1.0))
    throw std::invalid_argument("lambda_lower_bound_unfolded: kappa0 must be >= 1");
  const double log_n = std::log(static_cast<double>(in.n));
  const double width = 37.0 * in.q * log_n * std::sqrt(std::log(2.0 * in.p + 1.0)) + 1.0;
  return kappa0 * 4.0 * in.bounds.k * b_n / std::sqrt(static_cast<double>(in.n)) * width;
}

double delta_m(int m, int p, int n, const ParameterBounds& bounds, int q) {
  bounds.validate();
  if (m < 1) throw std::invalid_argument("delta_m: need m >= 1");
  if (n < 2) throw std::invalid_argument("delta_m: need n >= 2");
  const double log_n = std::log(static_cast<double>(n));
  return m * std::sqrt(std::log(2.0 * p + 1.0)) * log_n +
         2.0 * std::sqrt(static_cast<double>(bounds.k)) * scale_constant(bounds, q);
}

double sup_log_ratio_rn(const ParameterBounds& bounds, int q, double b_n) {
  bounds.validate();
  if (!(b_n > 0.0)) throw std::invalid_argument("sup_log_ratio_rn: b_n must be positive");
  return 2.0 * bounds.k * b_n * scale_constant(bounds, q);
}

double log_packing_bound(double delta, int m, double b_n, int p, int q,
                         const ParameterBounds& bounds) {
  bounds.validate();
  if (!(delta > 0.0)) throw std::invalid_argument("log_packing_bound: delta must be positive");
  if (m < 1) throw std::invalid_argument("log_packing_bound: need m >= 1");
  const double k = static_cast<double>(bounds.k);
  const double grid = 72.0 * b_n * b_n * q * q * k * k * m * m / (delta * delta) *
                      std::log(2.0 * p + 1.0);
  const double ball_terms =
      std::log1p(18.0 * b_n * k * q * bounds.a_beta / delta) +
      std::log1p(18.0 * b_n * k * bounds.a_gamma / delta) +
      std::log1p(18.0 * b_n * k * q_sqrt_q(q) / (bounds.a_sigma_min * delta));
  return grid + k * ball_terms;
}

double response_tail_bound(double m_n, int n, const ParameterBounds& bounds, int q) {
  bounds.validate();
  if (!(m_n > 0.0)) throw std::invalid_argument("response_tail_bound: m_n must be positive");
  if (n < 1) throw std::invalid_argument("response_tail_bound: need n >= 1");
  const double expo = (m_n * m_n - 2.0 * m_n * bounds.a_beta) / (2.0 * bounds.a_sigma_max);
  return 2.0 * bounds.k * n * q * bounds.a_gamma * std::exp(-expo);
}

double chernoff_gaussian_tail(double t) {
  if (t < 0.0) throw std::invalid_argument("chernoff_gaussian_tail: t must be >= 0");
  return std::exp(-0.5 * t * t);
}

OracleRhs oracle_risk_rhs(double kl_inf_term, double l1_norm_psi0, const BoundInputs& in,
                          double lambda, bool allow_small_kappa) {
  in.validate(allow_small_kappa);
  if (kl_inf_term < 0.0 || l1_norm_psi0 < 0.0)
    throw std::invalid_argument("oracle_risk_rhs: negative surrogate terms");
  const double floor = lambda_lower_bound(in, allow_small_kappa);
  if (lambda < floor * (1.0 - 1e-12))
    throw std::invalid_argument("oracle_risk_rhs: lambda below the guaranteed lower bound");

  const ParameterBounds& b = in.bounds;
  const int q = in.q;
  const double root_k_over_n = std::sqrt(static_cast<double>(b.k) / in.n);

  OracleRhs rhs;
  rhs.oracle_term = (1.0 + 1.0 / in.kappa) * (kl_inf_term + lambda * l1_norm_psi0);
  rhs.lambda_term = lambda;
  const EntropyConstants ent = entropy_constants(b, q);
  const double entropy_scale =
      std::exp(0.5 * q - 1.0) * std::pow(M_PI, 0.5 * q) / std::pow(b.a_sigma_max, 0.5 * q) +
      ent.h_s0;
  rhs.tail_term = root_k_over_n * entropy_scale * std::sqrt(2.0 * q * b.a_gamma);
  const double sc = scale_constant(b, q);
  rhs.deviation_term = 302.0 * q * root_k_over_n *
                       envelope_bn_prime(in.n, b, q) * b.k * (1.0 + sc * sc);
  rhs.total = rhs.oracle_term + rhs.lambda_term + rhs.tail_term + rhs.deviation_term;
  return rhs;
}

}  // namespace sgame
