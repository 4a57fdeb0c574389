#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace sgame {

/// Box constraints defining the bounded parameter class of a soft-max-gated
/// mixture of Gaussian experts. `a_sigma_min`/`a_sigma_max` cap the
/// eigenvalues of the precision matrices (inverse covariances), so the
/// covariance eigenvalues live in [1/a_sigma_max, 1/a_sigma_min].
struct ParameterBounds {
  double a_gamma = 1.0;      // sup-norm cap on gating affine scores
  double a_beta = 1.0;       // cap on per-coordinate expert mean magnitude
  double a_sigma_min = 0.5;  // lower eigenvalue cap on Sigma^{-1}
  double a_sigma_max = 2.0;  // upper eigenvalue cap on Sigma^{-1}
  int k = 1;                 // number of experts

  double gate_lower() const { return std::exp(-2.0 * a_gamma) / k; }
  double gate_upper() const { return std::exp(2.0 * a_gamma) / k; }
  double cov_eig_min() const { return 1.0 / a_sigma_max; }
  double cov_eig_max() const { return 1.0 / a_sigma_min; }

  void validate() const {
    if (k < 1) throw std::invalid_argument("ParameterBounds: k must be >= 1");
    if (!(a_gamma > 0.0) || !(a_beta > 0.0))
      throw std::invalid_argument("ParameterBounds: a_gamma and a_beta must be positive");
    if (!(a_sigma_min > 0.0) || !(a_sigma_min <= a_sigma_max))
      throw std::invalid_argument("ParameterBounds: need 0 < a_sigma_min <= a_sigma_max");
  }
};

/// Soft-max gating coefficients: score of expert k at x is
/// intercepts[k] + slopes.row(k) . x.
struct GatingParams {
  Eigen::VectorXd intercepts;  // K
  Eigen::MatrixXd slopes;      // K x p

  int num_experts() const { return static_cast<int>(intercepts.size()); }
  int x_dim() const { return static_cast<int>(slopes.cols()); }

  static GatingParams zeros(int k, int p) {
    GatingParams g;
    g.intercepts = Eigen::VectorXd::Zero(k);
    g.slopes = Eigen::MatrixXd::Zero(k, p);
    return g;
  }
};

/// Gaussian expert coefficients. Expert k has mean
/// intercepts.row(k)^T + slopes[k] * x and covariance covariances[k].
struct ExpertParams {
  Eigen::MatrixXd intercepts;                // K x q
  std::vector<Eigen::MatrixXd> slopes;       // K entries, each q x p
  std::vector<Eigen::MatrixXd> covariances;  // K entries, each q x q SPD

  int num_experts() const { return static_cast<int>(intercepts.rows()); }
  int y_dim() const { return static_cast<int>(intercepts.cols()); }
  int x_dim() const { return slopes.empty() ? 0 : static_cast<int>(slopes[0].cols()); }

  static ExpertParams zeros(int k, int p, int q) {
    ExpertParams e;
    e.intercepts = Eigen::MatrixXd::Zero(k, q);
    e.slopes.assign(k, Eigen::MatrixXd::Zero(q, p));
    e.covariances.assign(k, Eigen::MatrixXd::Identity(q, q));
    return e;
  }
};

/// Full parameter vector of the mixture: gating, experts and the box the
/// parameters are constrained to.
struct SgameParams {
  GatingParams gating;
  ExpertParams experts;
  ParameterBounds bounds;

  int num_experts() const { return gating.num_experts(); }
  int x_dim() const { return gating.x_dim(); }
  int y_dim() const { return experts.y_dim(); }

  void validate() const;

  /// True when every box constraint holds up to relative slack `rtol`.
  bool in_class(double rtol = 1e-9) const;
};

/// Fixed design points paired with responses. Design entries must lie in
/// [0,1]; inputs are expected to be rescaled by the caller.
struct Dataset {
  Eigen::MatrixXd design;     // n x p
  Eigen::MatrixXd responses;  // n x q

  Dataset(Eigen::MatrixXd design_in, Eigen::MatrixXd responses_in)
      : design(std::move(design_in)), responses(std::move(responses_in)) {
    if (design.rows() < 1) throw std::invalid_argument("Dataset: need n >= 1");
    if (design.rows() != responses.rows())
      throw std::invalid_argument("Dataset: design and responses disagree on n");
    if ((design.array() < 0.0).any() || (design.array() > 1.0).any())
      throw std::invalid_argument("Dataset: design entries must lie in [0,1]");
    if (!design.allFinite() || !responses.allFinite())
      throw std::invalid_argument("Dataset: non-finite entries");
  }

  int size() const { return static_cast<int>(design.rows()); }
  int x_dim() const { return static_cast<int>(design.cols()); }
  int y_dim() const { return static_cast<int>(responses.cols()); }
};

}  // namespace sgame
