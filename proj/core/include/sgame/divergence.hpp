#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "sgame/types.hpp"

namespace sgame {

/// How conditional Kullback-Leibler integrals are evaluated. Monte Carlo is
/// unbiased and works for any q; quadrature is deterministic and restricted
/// to q = 1.
struct KlMethod {
  enum class Kind { MonteCarlo, Quadrature };
  Kind kind = Kind::MonteCarlo;
  int samples = 20000;        // Monte Carlo draws per design point
  std::uint64_t seed = 0;     // Monte Carlo stream
  int nodes = 1024;           // total quadrature nodes across panels
  double truncation_tail = 1e-12;

  static KlMethod monte_carlo(int samples, std::uint64_t seed) {
    KlMethod m;
    m.kind = Kind::MonteCarlo;
    m.samples = samples;
    m.seed = seed;
    return m;
  }
  static KlMethod quadrature(int nodes) {
    KlMethod m;
    m.kind = Kind::Quadrature;
    m.nodes = nodes;
    return m;
  }

  void validate() const {
    if (kind == Kind::MonteCarlo && samples < 1000)
      throw std::invalid_argument("KlMethod: Monte Carlo needs >= 1000 samples");
    if (kind == Kind::Quadrature && nodes < 64)
      throw std::invalid_argument("KlMethod: quadrature needs >= 64 nodes");
  }
};

/// Estimate plus a standard error (zero for quadrature). Monte Carlo
/// estimates may go slightly negative; they are reported as-is so averages
/// over replications stay unbiased.
struct KlEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// KL( truth(.|x) || candidate(.|x) ) = int ln(s_t/s_c) s_t dy.
KlEstimate kl_conditional(const SgameParams& truth, const SgameParams& candidate,
                          const Eigen::VectorXd& x, const KlMethod& method);

/// Average of kl_conditional over the rows of `design`. Monte Carlo streams
/// are derived per row from method.seed, so two candidates evaluated with
/// the same seed share random numbers.
KlEstimate kl_n(const SgameParams& truth, const SgameParams& candidate,
                const Eigen::MatrixXd& design, const KlMethod& method);

/// Closed-form KL between two q-variate Gaussians:
/// (tr(S2^{-1} S1) + (m2-m1)^T S2^{-1} (m2-m1) - q + ln det S2 - ln det S1)/2.
double gaussian_kl_closed_form(const Eigen::VectorXd& m1, const Eigen::MatrixXd& s1,
                               const Eigen::VectorXd& m2, const Eigen::MatrixXd& s2);

/// int phi(y;a,A) phi(y;b,B) dy =
/// (2*pi)^{-q/2} det(A+B)^{-1/2} exp(-(a-b)^T (A+B)^{-1} (a-b)/2).
double gaussian_product_constant(const Eigen::VectorXd& a, const Eigen::MatrixXd& a_cov,
                                 const Eigen::VectorXd& b, const Eigen::MatrixXd& b_cov);

/// C = (4*pi)^{-q/2} * A_Sigma^{q/2} and H = max(0, ln C): the constants
/// bounding the negative differential entropy of any in-class density.
struct EntropyConstants {
  double c_s0 = 0.0;
  double h_s0 = 0.0;
};
EntropyConstants entropy_constants(const ParameterBounds& bounds, int q);

/// Truncation half-interval for q = 1 quadrature against `truth` (optionally
/// widened to cover `candidate` means): largest component mean magnitude
/// plus enough standard deviations that the discarded Gaussian mass is
/// below `tail`.
double quadrature_truncation(const SgameParams& truth, const SgameParams* candidate,
                             const Eigen::VectorXd& x, double tail);

}  // namespace sgame
