#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "sgame/types.hpp"

namespace sgame {

enum class InitStrategy { KMeansResponsibilities, RandomSoftAssign };

struct FitConfig {
  int max_em_iters = 500;
  double em_tol = 1e-7;   // relative penalized-NLL decrease threshold
  int inner_iters = 25;   // proximal / coordinate sweeps per M-step
  int restarts = 5;
  std::uint64_t seed = 0;
  InitStrategy init_strategy = InitStrategy::KMeansResponsibilities;

  void validate() const {
    if (max_em_iters < 1) throw std::invalid_argument("FitConfig: max_em_iters >= 1");
    if (!(em_tol > 0.0)) throw std::invalid_argument("FitConfig: em_tol > 0");
    if (inner_iters < 1) throw std::invalid_argument("FitConfig: inner_iters >= 1");
    if (restarts < 1) throw std::invalid_argument("FitConfig: restarts >= 1");
  }
};

/// A component whose total responsibility collapsed below 1e-10. Surfaced
/// rather than silently reseeded, so experiments notice pathological
/// (lambda, K) combinations.
class EmptyComponentError : public std::runtime_error {
 public:
  EmptyComponentError(int component, int restart)
      : std::runtime_error("empty component " + std::to_string(component) + " (restart " +
                           std::to_string(restart) + ")"),
        component(component),
        restart(restart) {}
  int component;
  int restart;
};

struct FitResult {
  SgameParams params;
  std::vector<double> penalized_nll_trace;  // nonincreasing up to 1e-8 slack
  double final_penalized_nll = 0.0;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> active_gating;  // K x p
  std::vector<Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>> active_experts;  // K of q x p
  bool converged = false;
  int iterations = 0;
};

/// -(1/n) sum_i ln s_psi(y_i|x_i) + lambda * |psi^{[1,2]}|_1.
double penalized_nll(const SgameParams& psi, const Dataset& data, double lambda);

/// Posterior responsibilities r_{ik} proportional to
/// g_k(x_i) * phi(y_i; mean_k(x_i), Sigma_k), rows summing to one.
Eigen::MatrixXd e_step(const SgameParams& psi, const Dataset& data);

/// Proximal-gradient step on the responsibility-weighted multinomial
/// logistic loss with l1-penalized slopes. The returned value is feasible
/// and its penalized surrogate is never above the one at `init`.
GatingParams m_step_gating(const Eigen::MatrixXd& resp, const Eigen::MatrixXd& design,
                           const GatingParams& init, double lambda,
                           const ParameterBounds& bounds, const FitConfig& cfg);

/// Per-component coordinate-descent Lasso on the responsibility-weighted
/// Gaussian surrogate (intercepts unpenalized, slopes soft-thresholded),
/// followed by the eigenvalue-clipped weighted residual covariance.
/// Throws EmptyComponentError when a column of resp sums below 1e-10.
ExpertParams m_step_experts(const Eigen::MatrixXd& resp, const Dataset& data,
                            const ExpertParams& init, double lambda,
                            const ParameterBounds& bounds, const FitConfig& cfg);

/// Penalized EM for the Lasso estimator. Deterministic given cfg.seed;
/// the best of cfg.restarts restarts by final penalized NLL is returned.
FitResult fit_lasso(const Dataset& data, int k, double lambda, const ParameterBounds& bounds,
                    const FitConfig& cfg);

/// Same EM skeleton with the penalized coordinates (gating and expert mean
/// slopes, concatenated) projected onto the l1 ball of radius `m` after
/// every M-step. The reported trace is the plain NLL.
FitResult fit_ball_constrained(const Dataset& data, int k, int m, const ParameterBounds& bounds,
                               const FitConfig& cfg);

/// Euclidean projection onto the l1 ball of the given radius.
Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double radius);

struct BallCriterion {
  int m = 0;
  double nll = 0.0;
  double criterion = 0.0;  // nll + lambda * m
};

struct BallSelection {
  int m_hat = 0;
  FitResult fit;
  std::vector<BallCriterion> grid;    // one entry per grid radius
  std::vector<FitResult> fits;        // aligned with grid
  double eta_achieved = 0.0;          // criterion(m_hat) - min criterion
};

/// Fits every radius in the (strictly increasing) grid, scores each with
/// nll + lambda*m, and returns the smallest radius whose score is within
/// eta of the grid minimum.
BallSelection select_ball(const Dataset& data, int k, const std::vector<int>& m_grid,
                          double lambda, double eta, const ParameterBounds& bounds,
                          const FitConfig& cfg);

}  // namespace sgame
