#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "sgame/divergence.hpp"
#include "sgame/estimator.hpp"
#include "sgame/types.hpp"

namespace sgame {

/// Regularization policy for the oracle experiment: either the guaranteed
/// lower bound evaluated at the given kappa, or an explicit grid.
struct TheoremMinimum {
  double kappa = 148.0;
};
struct LambdaGrid {
  std::vector<double> values;
};
using LambdaPolicy = std::variant<TheoremMinimum, LambdaGrid>;

struct ExperimentConfig {
  SgameParams truth;
  std::vector<int> n_grid{100, 200, 400};
  int replications = 50;
  LambdaPolicy lambda_policy = TheoremMinimum{};
  KlMethod kl_method = KlMethod::monte_carlo(20000, 0);
  std::uint64_t seed = 0;
  FitConfig fit_cfg;
  int threads = 1;

  void validate() const;
};

/// One grid point of the oracle experiment. `holds` records whether
/// lhs_mean + 2*lhs_se <= rhs.
struct OracleRow {
  int n = 0;
  double lambda = 0.0;
  int rep_count = 0;
  double lhs_mean = 0.0;
  double lhs_se = 0.0;
  double rhs = 0.0;
  double rhs_term1 = 0.0;  // (1+1/kappa)(kl_inf + lambda*|psi0|)
  double rhs_term2 = 0.0;  // lambda
  double rhs_term3 = 0.0;  // entropy/tail remainder
  double rhs_term4 = 0.0;  // deviation remainder
  bool holds = false;
};

struct OracleReport {
  std::vector<OracleRow> rows;
  int failed_replications = 0;
  bool all_hold() const;
  std::string to_csv() const;
};

/// Simulates from cfg.truth on fixed uniform designs, fits the Lasso at each
/// grid point, estimates the average KL against the truth, and compares with
/// the closed-form risk bound evaluated at the truth surrogate.
OracleReport run_oracle_experiment(const ExperimentConfig& cfg);

/// Outcome of one verification suite. `worst_case` is suite-specific
/// (max ratio, max error, worst margin); `witness` describes the worst or
/// first violating draw.
struct SuiteReport {
  std::string suite;
  int trials = 0;
  int violations = 0;
  double worst_case = 0.0;
  std::string witness;
  bool passed = false;
  std::string to_json() const;
};

/// Random in-class draws; asserts |grad ln s|_inf <= G(|y|_inf) everywhere
/// and records the largest observed ratio.
SuiteReport verify_gradient_envelope(const ParameterBounds& bounds, int q, int p, int trials,
                                     std::uint64_t seed);

/// Monte Carlo estimate of P(max_i |Y_i|_inf > m_n) under psi against the
/// closed-form tail bound; holds when estimate - 3*SE <= bound.
SuiteReport verify_tail_bound(const SgameParams& psi, const Eigen::MatrixXd& design, double m_n,
                              int mc_reps, std::uint64_t seed);

/// Monte Carlo negative-entropy estimates at each design row against
/// ln C_s0; a row violates when estimate > ln C_s0 + 3*SE.
SuiteReport verify_entropy_bound(const SgameParams& psi0, const Eigen::MatrixXd& design,
                                 int mc_reps, std::uint64_t seed);

/// Quadrature of Gaussian product integrals against the closed form
/// (tolerance 1e-6) and the capped-eigenvalue domination constant.
SuiteReport verify_product_constant(int trials, std::uint64_t seed);

/// Eigenvalue interlacing extremes on random symmetric pairs:
/// min(A+B) >= min(A)+min(B) and max(A+B) <= max(A)+max(B), slack 1e-10.
SuiteReport verify_weyl(int trials, int q, std::uint64_t seed);

/// Runs fits across datasets and lambdas and checks every penalized-NLL
/// trace is nonincreasing within 1e-8.
SuiteReport verify_em_monotonicity(const std::vector<Dataset>& datasets,
                                   const std::vector<double>& lambdas,
                                   const ParameterBounds& bounds, const FitConfig& cfg);

/// Sparse two-expert univariate truth on ten covariates, inside a generous
/// box; the default subject for experiments and verification suites.
SgameParams make_default_truth();

/// Experiment defaults: n in {100,200,400}, 50 replications, lambda at the
/// kappa = 148 threshold, Monte Carlo KL with 20000 draws.
ExperimentConfig make_default_experiment_config(std::uint64_t seed);

}  // namespace sgame
