#include "sgame/model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace sgame {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;  // ln(2*pi)

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

void SgameParams::validate() const {
  bounds.validate();
  const int k = gating.num_experts();
  const int p = gating.x_dim();
  const int q = experts.y_dim();
  if (k < 1) throw std::invalid_argument("SgameParams: need at least one expert");
  if (bounds.k != k) throw std::invalid_argument("SgameParams: bounds.k disagrees with gating");
  if (experts.num_experts() != k)
    throw std::invalid_argument("SgameParams: gating/expert component counts disagree");
  if (static_cast<int>(experts.slopes.size()) != k ||
      static_cast<int>(experts.covariances.size()) != k)
    throw std::invalid_argument("SgameParams: expert slope/covariance counts disagree");
  for (int j = 0; j < k; ++j) {
    if (experts.slopes[j].rows() != q || experts.slopes[j].cols() != p)
      throw std::invalid_argument("SgameParams: expert slope dimensions disagree");
    if (experts.covariances[j].rows() != q || experts.covariances[j].cols() != q)
      throw std::invalid_argument("SgameParams: covariance dimensions disagree");
  }
}

bool SgameParams::in_class(double rtol) const {
  try {
    require_in_class(*this, rtol);
  } catch (const std::invalid_argument&) {
    return false;
  }
  return true;
}

void require_in_class(const SgameParams& psi, double rtol) {
  psi.validate();
  const int k = psi.num_experts();
  const int q = psi.y_dim();
  const ParameterBounds& b = psi.bounds;
  for (int j = 0; j < k; ++j) {
    const double gsum =
        std::abs(psi.gating.intercepts[j]) + psi.gating.slopes.row(j).cwiseAbs().sum();
    if (gsum > b.a_gamma * (1.0 + rtol))
      throw std::invalid_argument("gating row " + std::to_string(j) + ": |gamma_k0| + |gamma_k|_1 = " +
                                  std::to_string(gsum) + " exceeds a_gamma = " +
                                  std::to_string(b.a_gamma));
    for (int z = 0; z < q; ++z) {
      const double bsum =
          std::abs(psi.experts.intercepts(j, z)) + psi.experts.slopes[j].row(z).cwiseAbs().sum();
      if (bsum > b.a_beta * (1.0 + rtol))
        throw std::invalid_argument("expert " + std::to_string(j) + " output " + std::to_string(z) +
                                    ": |beta_k0| + |beta row|_1 = " + std::to_string(bsum) +
                                    " exceeds a_beta = " + std::to_string(b.a_beta));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(psi.experts.covariances[j],
                                                      Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
      throw std::invalid_argument("covariance " + std::to_string(j) + ": eigensolve failed");
    const double lo = b.cov_eig_min();
    const double hi = b.cov_eig_max();
    if (es.eigenvalues().minCoeff() < lo * (1.0 - rtol))
      throw std::invalid_argument("covariance " + std::to_string(j) + ": eigenvalue " +
                                  std::to_string(es.eigenvalues().minCoeff()) +
                                  " below 1/a_sigma_max = " + std::to_string(lo));
    if (es.eigenvalues().maxCoeff() > hi * (1.0 + rtol))
      throw std::invalid_argument("covariance " + std::to_string(j) + ": eigenvalue " +
                                  std::to_string(es.eigenvalues().maxCoeff()) +
                                  " above 1/a_sigma_min = " + std::to_string(hi));
  }
}

Eigen::VectorXd softmax_gates(const GatingParams& gating, const Eigen::VectorXd& x) {
  if (x.size() != gating.slopes.cols())
    throw std::invalid_argument("softmax_gates: x dimension disagrees with gating slopes");
  Eigen::VectorXd w = gating.intercepts + gating.slopes * x;
  const double m = w.maxCoeff();
  Eigen::VectorXd g = (w.array() - m).exp();
  g /= g.sum();
  return g;
}

DensityCache::DensityCache(const SgameParams& psi) : psi_(&psi) {
  psi.validate();
  const int k = psi.num_experts();
  llts_.reserve(k);
  log_dets_.reserve(k);
  for (int j = 0; j < k; ++j) {
    llts_.emplace_back(psi.experts.covariances[j]);
    if (llts_.back().info() != Eigen::Success)
      throw std::invalid_argument("DensityCache: covariance not positive definite");
    const Eigen::MatrixXd& l = llts_.back().matrixLLT();
    double ld = 0.0;
    for (int z = 0; z < l.rows(); ++z) ld += 2.0 * std::log(l(z, z));
    log_dets_.push_back(ld);
  }
}

Eigen::VectorXd DensityCache::gate_scores(const Eigen::VectorXd& x) const {
  return psi_->gating.intercepts + psi_->gating.slopes * x;
}

Eigen::VectorXd DensityCache::mean(int k, const Eigen::VectorXd& x) const {
  return psi_->experts.intercepts.row(k).transpose() + psi_->experts.slopes[k] * x;
}

Eigen::VectorXd DensityCache::log_components(const Eigen::VectorXd& x,
                                             const Eigen::VectorXd& y) const {
  const int k = psi_->num_experts();
  const int q = psi_->y_dim();
  Eigen::VectorXd w = gate_scores(x);
  const double lse = log_sum_exp(w);
  Eigen::VectorXd out(k);
  for (int j = 0; j < k; ++j) {
    const Eigen::VectorXd d = y - mean(j, x);
    const Eigen::VectorXd half = llts_[j].matrixL().solve(d);
    const double quad = half.squaredNorm();
    out[j] = (w[j] - lse) - 0.5 * (q * kLogTwoPi + log_dets_[j] + quad);
  }
  return out;
}

double DensityCache::log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  return log_sum_exp(log_components(x, y));
}

Eigen::VectorXd DensityCache::sample(const Eigen::VectorXd& x, Rng& rng) const {
  const Eigen::VectorXd g = softmax_gates(psi_->gating, x);
  const double u = rng.uniform01();
  int pick = g.size() - 1;
  double acc = 0.0;
  for (int j = 0; j < g.size(); ++j) {
    acc += g[j];
    if (u < acc) {
      pick = j;
      break;
    }
  }
  const int q = psi_->y_dim();
  Eigen::VectorXd z(q);
  for (int i = 0; i < q; ++i) z[i] = rng.normal();
  return mean(pick, x) + llts_[pick].matrixL() * z;
}

double log_density(const SgameParams& psi, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  return DensityCache(psi).log_density(x, y);
}

Eigen::VectorXd sample(const SgameParams& psi, const Eigen::VectorXd& x, Rng& rng) {
  return DensityCache(psi).sample(x, rng);
}

Eigen::VectorXd log_density_gradient(const SgameParams& psi, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& y) {
  const DensityCache cache(psi);
  const int k = psi.num_experts();
  const int p = psi.x_dim();
  const int q = psi.y_dim();

  const Eigen::VectorXd g = softmax_gates(psi.gating, x);
  Eigen::VectorXd lc = cache.log_components(x, y);
  const double lse = log_sum_exp(lc);
  const Eigen::VectorXd r = (lc.array() - lse).exp();  // responsibilities

  Eigen::VectorXd grad(flat_gradient_size(k, p, q));
  int off_g0 = 0;
  int off_g = k;
  int off_b0 = off_g + k * p;
  int off_b = off_b0 + k * q;
  int off_s = off_b + k * q * p;

  for (int j = 0; j < k; ++j) {
    const double diff = r[j] - g[j];
    grad[off_g0 + j] = diff;
    grad.segment(off_g + j * p, p) = diff * x;

    const Eigen::VectorXd d = y - cache.mean(j, x);
    const Eigen::VectorXd sid = cache.llt(j).solve(d);  // Sigma^{-1} d
    grad.segment(off_b0 + j * q, q) = r[j] * sid;
    for (int z = 0; z < q; ++z)
      grad.segment(off_b + j * q * p + z * p, p) = (r[j] * sid[z]) * x;

    const Eigen::MatrixXd sinv =
        cache.llt(j).solve(Eigen::MatrixXd::Identity(q, q));
    const Eigen::MatrixXd dcov = 0.5 * r[j] * (sid * sid.transpose() - sinv);
    for (int z1 = 0; z1 < q; ++z1)
      grad.segment(off_s + j * q * q + z1 * q, q) = dcov.row(z1);
  }
  return grad;
}

double gradient_envelope(double y_inf_norm, const ParameterBounds& bounds, int q) {
  bounds.validate();
  if (y_inf_norm < 0.0) throw std::invalid_argument("gradient_envelope: |y|_inf must be >= 0");
  const double front = std::max(bounds.a_sigma_max, 1.0 + bounds.k * bounds.gate_upper());
  const double qs = q * std::sqrt(static_cast<double>(q));
  const double span = y_inf_norm + bounds.a_beta;
  return front * (1.0 + qs * span * span * bounds.a_sigma_max);
}

SgameParams project_to_bounds(const SgameParams& psi) {
  psi.validate();
  SgameParams out = psi;
  const int k = psi.num_experts();
  const int q = psi.y_dim();
  const double slack = 1.0 + 1e-12;

  for (int j = 0; j < k; ++j) {
    const double gsum =
        std::abs(out.gating.intercepts[j]) + out.gating.slopes.row(j).cwiseAbs().sum();
    if (gsum > out.bounds.a_gamma * slack) {
      const double c = out.bounds.a_gamma / gsum;
      out.gating.intercepts[j] *= c;
      out.gating.slopes.row(j) *= c;
    }
    for (int z = 0; z < q; ++z) {
      const double bsum =
          std::abs(out.experts.intercepts(j, z)) + out.experts.slopes[j].row(z).cwiseAbs().sum();
      if (bsum > out.bounds.a_beta * slack) {
        const double c = out.bounds.a_beta / bsum;
        out.experts.intercepts(j, z) *= c;
        out.experts.slopes[j].row(z) *= c;
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.experts.covariances[j]);
    if (es.info() != Eigen::Success)
      throw std::invalid_argument("project_to_bounds: covariance eigensolve failed");
    const double lo = out.bounds.cov_eig_min();
    const double hi = out.bounds.cov_eig_max();
    const Eigen::VectorXd& ev = es.eigenvalues();
    if (ev.minCoeff() < lo * (1.0 - 1e-12) || ev.maxCoeff() > hi * slack) {
      const Eigen::VectorXd clipped = ev.cwiseMax(lo).cwiseMin(hi);
      Eigen::MatrixXd rebuilt =
          es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
      out.experts.covariances[j] = 0.5 * (rebuilt + rebuilt.transpose());
    }
  }
  return out;
}

double penalized_l1_norm(const SgameParams& psi) {
  double s = psi.gating.slopes.cwiseAbs().sum();
  for (const auto& b : psi.experts.slopes) s += b.cwiseAbs().sum();
  return s;
}

double penalty(const SgameParams& psi, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("penalty: lambda must be nonnegative");
  return lambda * penalized_l1_norm(psi);
}

}  // namespace sgame
