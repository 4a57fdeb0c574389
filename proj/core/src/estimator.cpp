#include "sgame/estimator.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "sgame/model.hpp"
#include "sgame/rng.hpp"

namespace sgame {

namespace {

constexpr double kEmptyComponentTol = 1e-10;

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

// ---- gating M-step internals ------------------------------------------------

// Smooth part of the gating surrogate: -(1/n) sum_i sum_k r_ik ln g_k(x_i).
double gating_smooth_loss(const Eigen::MatrixXd& resp, const Eigen::MatrixXd& design,
                          const GatingParams& g) {
  const int n = static_cast<int>(design.rows());
  Eigen::MatrixXd scores = design * g.slopes.transpose();
  scores.rowwise() += g.intercepts.transpose();
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double m = scores.row(i).maxCoeff();
    const double lse = m + std::log((scores.row(i).array() - m).exp().sum());
    loss += lse - resp.row(i).dot(scores.row(i));
  }
  return loss / n;
}

void gating_smooth_gradient(const Eigen::MatrixXd& resp, const Eigen::MatrixXd& design,
                            const GatingParams& g, Eigen::VectorXd& grad_intercepts,
                            Eigen::MatrixXd& grad_slopes) {
  const int n = static_cast<int>(design.rows());
  Eigen::MatrixXd scores = design * g.slopes.transpose();
  scores.rowwise() += g.intercepts.transpose();
  for (int i = 0; i < n; ++i) {
    const double m = scores.row(i).maxCoeff();
    Eigen::ArrayXd e = (scores.row(i).transpose().array() - m).exp();
    scores.row(i) = (e / e.sum()).matrix().transpose();  // overwrite with gates
  }
  const Eigen::MatrixXd diff = (scores - resp) / static_cast<double>(n);
  grad_intercepts = diff.colwise().sum().transpose();
  grad_slopes = diff.transpose() * design;
}

double gating_penalized(const Eigen::MatrixXd& resp, const Eigen::MatrixXd& design,
                        const GatingParams& g, double lambda) {
  return gating_smooth_loss(resp, design, g) + lambda * g.slopes.cwiseAbs().sum();
}

// Row rescaling into |gamma_{k0}| + |gamma_k|_1 <= A_gamma. Zero slopes stay
// exactly zero under scaling.
GatingParams project_gating(const GatingParams& g, const ParameterBounds& bounds) {
  GatingParams out = g;
  for (int k = 0; k < out.num_experts(); ++k) {
    const double s = std::abs(out.intercepts[k]) + out.slopes.row(k).cwiseAbs().sum();
    if (s > bounds.a_gamma * (1.0 + 1e-12)) {
      const double c = bounds.a_gamma / s;
      out.intercepts[k] *= c;
      out.slopes.row(k) *= c;
    }
  }
  return out;
}

// ---- expert M-step internals ------------------------------------------------

struct ComponentFit {
  Eigen::VectorXd intercept;  // q
  Eigen::MatrixXd slope;      // q x p
  Eigen::MatrixXd residual;   // n x q, y_i - mean(x_i)
};

// Cyclic coordinate descent on
//   (1/2n) sum_i w_i d_i^T Omega d_i + lambda * |slope|_1,
// d_i = y_i - b - B x_i, Omega the current precision. Intercepts are
// unpenalized; slope coordinates landing on the threshold become exact zeros.
ComponentFit expert_coordinate_descent(const Eigen::MatrixXd& design,
                                       const Eigen::MatrixXd& responses,
                                       const Eigen::VectorXd& weights,
                                       const Eigen::MatrixXd& omega,
                                       const Eigen::VectorXd& b0, const Eigen::MatrixXd& slope0,
                                       double lambda, int sweeps) {
  const int n = static_cast<int>(design.rows());
  const int p = static_cast<int>(design.cols());
  const int q = static_cast<int>(responses.cols());
  const double wsum = weights.sum();

  ComponentFit fit;
  fit.intercept = b0;
  fit.slope = slope0;
  Eigen::MatrixXd d = responses;
  d.rowwise() -= fit.intercept.transpose();
  d.noalias() -= design * fit.slope.transpose();
  Eigen::MatrixXd t = d * omega;  // row i holds d_i^T Omega

  Eigen::VectorXd wx2(p);
  for (int j = 0; j < p; ++j)
    wx2[j] = weights.dot(design.col(j).cwiseProduct(design.col(j))) / n;

  const double scale = 1.0 + fit.slope.cwiseAbs().maxCoeff() + fit.intercept.cwiseAbs().maxCoeff();
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double max_step = 0.0;
    for (int z = 0; z < q; ++z) {
      const double ozz = omega(z, z);
      {
        const double a = ozz * wsum / n;
        if (a > 0.0) {
          const double s = weights.dot(t.col(z)) / n;
          const double delta = s / a;
          if (delta != 0.0) {
            fit.intercept[z] += delta;
            d.col(z).array() -= delta;
            t.noalias() -= delta * Eigen::VectorXd::Ones(n) * omega.row(z);
            max_step = std::max(max_step, std::abs(delta));
          }
        }
      }
      for (int j = 0; j < p; ++j) {
        const double a = ozz * wx2[j];
        const double old = fit.slope(z, j);
        double next = 0.0;
        if (a > 0.0) {
          const double s = weights.dot(design.col(j).cwiseProduct(t.col(z))) / n;
          next = soft_threshold(s + a * old, lambda) / a;
        }
        const double delta = next - old;
        if (delta != 0.0) {
          fit.slope(z, j) = next;
          d.col(z).noalias() -= delta * design.col(j);
          t.noalias() -= delta * design.col(j) * omega.row(z);
          max_step = std::max(max_step, std::abs(delta));
        }
      }
    }
    if (max_step < 1e-14 * scale) break;
  }
  fit.residual = std::move(d);
  return fit;
}

double expert_surrogate(const Eigen::MatrixXd& residual, const Eigen::VectorXd& weights,
                        const Eigen::MatrixXd& omega, const Eigen::MatrixXd& slope,
                        double lambda) {
  const int n = static_cast<int>(residual.rows());
  const Eigen::MatrixXd t = residual * omega;
  double quad = 0.0;
  for (int i = 0; i < n; ++i) quad += weights[i] * residual.row(i).dot(t.row(i));
  return 0.5 * quad / n + lambda * slope.cwiseAbs().sum();
}

Eigen::MatrixXd clip_covariance(const Eigen::MatrixXd& s, const ParameterBounds& bounds) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("m_step_experts: covariance eigensolve failed");
  const double lo = bounds.cov_eig_min();
  const double hi = bounds.cov_eig_max();
  const Eigen::VectorXd& ev = es.eigenvalues();
  if (ev.minCoeff() >= lo * (1.0 - 1e-12) && ev.maxCoeff() <= hi * (1.0 + 1e-12))
    return 0.5 * (s + s.transpose());
  const Eigen::VectorXd clipped = ev.cwiseMax(lo).cwiseMin(hi);
  Eigen::MatrixXd rebuilt = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (rebuilt + rebuilt.transpose());
}

// ---- initialization ---------------------------------------------------------

Eigen::MatrixXd random_soft_assign(int n, int k, Rng& rng) {
  Eigen::MatrixXd resp(n, k);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < k; ++j) {
      resp(i, j) = 0.25 + rng.uniform01();
      s += resp(i, j);
    }
    resp.row(i) /= s;
  }
  return resp;
}

std::optional<Eigen::MatrixXd> kmeans_responsibilities(const Dataset& data, int k, Rng& rng) {
  const int n = data.size();
  Eigen::MatrixXd z(n, data.x_dim() + data.y_dim());
  z << data.design, data.responses;

  std::vector<int> seeds;
  for (int attempts = 0; static_cast<int>(seeds.size()) < k && attempts < 64 * k; ++attempts) {
    const int idx = static_cast<int>(rng.uniform01() * n) % n;
    if (std::find(seeds.begin(), seeds.end(), idx) == seeds.end()) seeds.push_back(idx);
  }
  if (static_cast<int>(seeds.size()) < k) return std::nullopt;

  Eigen::MatrixXd centroids(k, z.cols());
  for (int j = 0; j < k; ++j) centroids.row(j) = z.row(seeds[j]);

  std::vector<int> assign(n, 0);
  for (int iter = 0; iter < 25; ++iter) {
    bool moved = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (z.row(i) - centroids.row(0)).squaredNorm();
      for (int j = 1; j < k; ++j) {
        const double dj = (z.row(i) - centroids.row(j)).squaredNorm();
        if (dj < best_d) {
          best_d = dj;
          best = j;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        moved = true;
      }
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, z.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (int i = 0; i < n; ++i) {
      sums.row(assign[i]) += z.row(i);
      counts[assign[i]] += 1.0;
    }
    if ((counts.array() < 0.5).any()) return std::nullopt;
    for (int j = 0; j < k; ++j) centroids.row(j) = sums.row(j) / counts[j];
    if (!moved) break;
  }
  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(n, k);
  for (int i = 0; i < n; ++i) resp(i, assign[i]) = 1.0;
  return resp;
}

}  // namespace

double penalized_nll(const SgameParams& psi, const Dataset& data, double lambda) {
  if (psi.x_dim() != data.x_dim() || psi.y_dim() != data.y_dim())
    throw std::invalid_argument("penalized_nll: dimensions disagree");
  const DensityCache cache(psi);
  double ll = 0.0;
  for (int i = 0; i < data.size(); ++i)
    ll += cache.log_density(data.design.row(i).transpose(), data.responses.row(i).transpose());
  return -ll / data.size() + penalty(psi, lambda);
}

Eigen::MatrixXd e_step(const SgameParams& psi, const Dataset& data) {
  const DensityCache cache(psi);
  const int n = data.size();
  const int k = psi.num_experts();
  Eigen::MatrixXd resp(n, k);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd lc =
        cache.log_components(data.design.row(i).transpose(), data.responses.row(i).transpose());
    const double m = lc.maxCoeff();
    Eigen::ArrayXd e = (lc.array() - m).exp();
    resp.row(i) = (e / e.sum()).matrix().transpose();
  }
  return resp;
}

GatingParams m_step_gating(const Eigen::MatrixXd& resp, const Eigen::MatrixXd& design,
                           const GatingParams& init, double lambda,
                           const ParameterBounds& bounds, const FitConfig& cfg) {
  cfg.validate();
  if (lambda < 0.0) throw std::invalid_argument("m_step_gating: lambda must be >= 0");
  if (resp.rows() != design.rows())
    throw std::invalid_argument("m_step_gating: resp and design disagree on n");
  if (((resp.rowwise().sum().array() - 1.0).abs() > 1e-8).any())
    throw std::invalid_argument("m_step_gating: responsibility rows must sum to 1");

  GatingParams cur = project_gating(init, bounds);
  GatingParams best = cur;
  double best_val = gating_penalized(resp, design, cur, lambda);
  if (!std::isfinite(best_val)) throw std::runtime_error("m_step_gating: non-finite loss");

  double step = 1.0;
  Eigen::VectorXd gi;
  Eigen::MatrixXd gs;
  for (int it = 0; it < cfg.inner_iters; ++it) {
    const double f_cur = gating_smooth_loss(resp, design, cur);
    gating_smooth_gradient(resp, design, cur, gi, gs);
    step = std::min(step * 2.0, 1e8);

    GatingParams cand;
    bool ok = false;
    for (int bt = 0; bt < 80; ++bt) {
      cand.intercepts = cur.intercepts - step * gi;
      cand.slopes = (cur.slopes - step * gs)
                        .unaryExpr([&](double v) { return soft_threshold(v, step * lambda); });
      const double f_cand = gating_smooth_loss(resp, design, cand);
      const Eigen::VectorXd di = cand.intercepts - cur.intercepts;
      const Eigen::MatrixXd ds = cand.slopes - cur.slopes;
      const double lin = gi.dot(di) + (gs.array() * ds.array()).sum();
      const double quad = (di.squaredNorm() + ds.squaredNorm()) / (2.0 * step);
      if (std::isfinite(f_cand) && f_cand <= f_cur + lin + quad + 1e-15) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    if (!ok) break;

    const GatingParams feasible = project_gating(cand, bounds);
    const double val = gating_penalized(resp, design, feasible, lambda);
    if (std::isfinite(val) && val < best_val) {
      best = feasible;
      best_val = val;
    }
    const Eigen::VectorXd di = cand.intercepts - cur.intercepts;
    const Eigen::MatrixXd ds = cand.slopes - cur.slopes;
    cur = cand;
    if (di.cwiseAbs().maxCoeff() + ds.cwiseAbs().maxCoeff() < 1e-14) break;
  }
  return best;
}

ExpertParams m_step_experts(const Eigen::MatrixXd& resp, const Dataset& data,
                            const ExpertParams& init, double lambda,
                            const ParameterBounds& bounds, const FitConfig& cfg) {
  cfg.validate();
  if (lambda < 0.0) throw std::invalid_argument("m_step_experts: lambda must be >= 0");
  if (resp.rows() != data.design.rows())
    throw std::invalid_argument("m_step_experts: resp and data disagree on n");
  const int k = static_cast<int>(resp.cols());
  const int n = data.size();
  const int q = data.y_dim();

  ExpertParams out = init;
  for (int c = 0; c < k; ++c) {
    const Eigen::VectorXd w = resp.col(c);
    if (w.sum() < kEmptyComponentTol) throw EmptyComponentError(c, -1);

    Eigen::LLT<Eigen::MatrixXd> llt(init.covariances[c]);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("m_step_experts: covariance not positive definite");
    const Eigen::MatrixXd omega = llt.solve(Eigen::MatrixXd::Identity(q, q));

    ComponentFit fit = expert_coordinate_descent(data.design, data.responses, w, omega,
                                                 init.intercepts.row(c).transpose(),
                                                 init.slopes[c], lambda, cfg.inner_iters);

    // Per-output feasibility: |b_z| + |row_z|_1 <= A_beta, by row rescaling.
    bool rescaled = false;
    for (int z = 0; z < q; ++z) {
      const double s = std::abs(fit.intercept[z]) + fit.slope.row(z).cwiseAbs().sum();
      if (s > bounds.a_beta * (1.0 + 1e-12)) {
        const double sc = bounds.a_beta / s;
        fit.intercept[z] *= sc;
        fit.slope.row(z) *= sc;
        rescaled = true;
      }
    }
    if (rescaled) {
      fit.residual = data.responses;
      fit.residual.rowwise() -= fit.intercept.transpose();
      fit.residual.noalias() -= data.design * fit.slope.transpose();
      Eigen::MatrixXd init_res = data.responses;
      init_res.rowwise() -= init.intercepts.row(c);
      init_res.noalias() -= data.design * init.slopes[c].transpose();
      const double before = expert_surrogate(init_res, w, omega, init.slopes[c], lambda);
      const double after = expert_surrogate(fit.residual, w, omega, fit.slope, lambda);
      if (after > before + 1e-12 * (1.0 + std::abs(before))) {
        fit.intercept = init.intercepts.row(c).transpose();
        fit.slope = init.slopes[c];
        fit.residual = std::move(init_res);
      }
    }

    out.intercepts.row(c) = fit.intercept.transpose();
    out.slopes[c] = fit.slope;
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(q, q);
    for (int i = 0; i < n; ++i)
      s.noalias() += w[i] * fit.residual.row(i).transpose() * fit.residual.row(i);
    s /= w.sum();
    out.covariances[c] = clip_covariance(s, bounds);
  }
  return out;
}

namespace {

struct EmRun {
  FitResult result;
  bool ok = false;
};

SgameParams initial_params(const Eigen::MatrixXd& resp, const Dataset& data, double lambda,
                           const ParameterBounds& bounds, const FitConfig& cfg) {
  const int k = static_cast<int>(resp.cols());
  const int p = data.x_dim();
  const int q = data.y_dim();

  GatingParams gating = GatingParams::zeros(k, p);
  const Eigen::VectorXd colmean = resp.colwise().mean().transpose();
  for (int j = 0; j < k; ++j) gating.intercepts[j] = std::log(colmean[j] + 1e-12);
  gating.intercepts.array() -= gating.intercepts.mean();
  gating = project_gating(gating, bounds);

  ExpertParams experts = ExpertParams::zeros(k, p, q);
  const double mid = 0.5 * (bounds.cov_eig_min() + bounds.cov_eig_max());
  for (auto& cov : experts.covariances) cov = mid * Eigen::MatrixXd::Identity(q, q);
  experts = m_step_experts(resp, data, experts, lambda, bounds, cfg);

  SgameParams psi;
  psi.gating = std::move(gating);
  psi.experts = std::move(experts);
  psi.bounds = bounds;
  return psi;
}

void fill_masks(FitResult& r) {
  const int k = r.params.num_experts();
  const int p = r.params.x_dim();
  const int q = r.params.y_dim();
  r.active_gating.resize(k, p);
  for (int c = 0; c < k; ++c)
    for (int j = 0; j < p; ++j) r.active_gating(c, j) = r.params.gating.slopes(c, j) != 0.0;
  r.active_experts.assign(k, Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>(q, p));
  for (int c = 0; c < k; ++c)
    for (int z = 0; z < q; ++z)
      for (int j = 0; j < p; ++j)
        r.active_experts[c](z, j) = r.params.experts.slopes[c](z, j) != 0.0;
}

// One EM run from one initialization. `ball_radius`, when nonnegative,
// switches on the l1-ball projection after every M-step.
EmRun run_em(const Dataset& data, int k, double lambda, double ball_radius,
             const ParameterBounds& bounds, const FitConfig& cfg, int restart) {
  Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(restart));
  Eigen::MatrixXd resp0;
  if (restart == 0 && cfg.init_strategy == InitStrategy::KMeansResponsibilities) {
    auto km = kmeans_responsibilities(data, k, rng);
    resp0 = km ? *km : random_soft_assign(data.size(), k, rng);
  } else {
    resp0 = random_soft_assign(data.size(), k, rng);
  }

  const auto ball_project = [&](SgameParams& psi) {
    if (ball_radius < 0.0) return;
    const int p = psi.x_dim();
    const int q = psi.y_dim();
    Eigen::VectorXd v(k * p + k * q * p);
    int off = 0;
    for (int c = 0; c < k; ++c, off += p) v.segment(off, p) = psi.gating.slopes.row(c).transpose();
    for (int c = 0; c < k; ++c)
      for (int z = 0; z < q; ++z, off += p) v.segment(off, p) = psi.experts.slopes[c].row(z).transpose();
    if (v.cwiseAbs().sum() <= ball_radius * (1.0 + 1e-12)) return;
    v = project_l1_ball(v, ball_radius);
    off = 0;
    for (int c = 0; c < k; ++c, off += p) psi.gating.slopes.row(c) = v.segment(off, p).transpose();
    for (int c = 0; c < k; ++c)
      for (int z = 0; z < q; ++z, off += p) psi.experts.slopes[c].row(z) = v.segment(off, p).transpose();
  };

  SgameParams psi = initial_params(resp0, data, lambda, bounds, cfg);
  ball_project(psi);

  EmRun run;
  FitResult& res = run.result;
  res.penalized_nll_trace.push_back(penalized_nll(psi, data, lambda));

  for (int it = 0; it < cfg.max_em_iters; ++it) {
    const Eigen::MatrixXd resp = e_step(psi, data);
    SgameParams next = psi;
    next.gating = m_step_gating(resp, data.design, psi.gating, lambda, bounds, cfg);
    next.experts = m_step_experts(resp, data, psi.experts, lambda, bounds, cfg);
    ball_project(next);

    const double prev = res.penalized_nll_trace.back();
    double val = penalized_nll(next, data, lambda);
    if (!(val <= prev + 1e-12 * (1.0 + std::abs(prev)))) {
      // With a ball constraint the projected step can overshoot; damp toward
      // the previous (feasible) iterate before giving up.
      bool rescued = false;
      if (ball_radius >= 0.0) {
        for (double t : {0.5, 0.25, 0.125, 0.0625}) {
          SgameParams blend = psi;
          blend.gating.intercepts = (1 - t) * psi.gating.intercepts + t * next.gating.intercepts;
          blend.gating.slopes = (1 - t) * psi.gating.slopes + t * next.gating.slopes;
          blend.experts.intercepts =
              (1 - t) * psi.experts.intercepts + t * next.experts.intercepts;
          for (int c = 0; c < k; ++c) {
            blend.experts.slopes[c] =
                (1 - t) * psi.experts.slopes[c] + t * next.experts.slopes[c];
            blend.experts.covariances[c] =
                (1 - t) * psi.experts.covariances[c] + t * next.experts.covariances[c];
          }
          const double bval = penalized_nll(blend, data, lambda);
          if (bval <= prev + 1e-12 * (1.0 + std::abs(prev))) {
            next = std::move(blend);
            val = bval;
            rescued = true;
            break;
          }
        }
      }
      if (!rescued) {
        res.converged = true;
        break;
      }
    }
    res.penalized_nll_trace.push_back(val);
    psi = std::move(next);
    if (prev - val <= cfg.em_tol * std::max(1.0, std::abs(prev))) {
      res.converged = true;
      break;
    }
  }

  res.params = std::move(psi);
  res.final_penalized_nll = res.penalized_nll_trace.back();
  res.iterations = static_cast<int>(res.penalized_nll_trace.size()) - 1;
  fill_masks(res);
  run.ok = true;
  return run;
}

FitResult fit_restarts(const Dataset& data, int k, double lambda, double ball_radius,
                       const ParameterBounds& bounds, const FitConfig& cfg) {
  cfg.validate();
  bounds.validate();
  if (bounds.k != k) throw std::invalid_argument("fit: bounds.k disagrees with requested K");
  if (data.size() < k) throw std::invalid_argument("fit: need n >= K");
  if (lambda < 0.0) throw std::invalid_argument("fit: lambda must be >= 0");

  std::optional<FitResult> best;
  std::string failures;
  for (int r = 0; r < cfg.restarts; ++r) {
    try {
      EmRun run = run_em(data, k, lambda, ball_radius, bounds, cfg, r);
      if (!best || run.result.final_penalized_nll < best->final_penalized_nll)
        best = std::move(run.result);
    } catch (const EmptyComponentError& e) {
      failures += (failures.empty() ? "" : "; ") + std::string("restart ") + std::to_string(r) +
                  ": " + e.what();
    }
  }
  if (!best) throw std::runtime_error("fit: all restarts failed (" + failures + ")");
  return *best;
}

}  // namespace

FitResult fit_lasso(const Dataset& data, int k, double lambda, const ParameterBounds& bounds,
                    const FitConfig& cfg) {
  return fit_restarts(data, k, lambda, -1.0, bounds, cfg);
}

FitResult fit_ball_constrained(const Dataset& data, int k, int m, const ParameterBounds& bounds,
                               const FitConfig& cfg) {
  if (m < 1) throw std::invalid_argument("fit_ball_constrained: need m >= 1");
  return fit_restarts(data, k, 0.0, static_cast<double>(m), bounds, cfg);
}

Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double radius) {
  if (radius < 0.0) throw std::invalid_argument("project_l1_ball: radius must be >= 0");
  if (v.cwiseAbs().sum() <= radius) return v;
  std::vector<double> u(v.size());
  for (int i = 0; i < v.size(); ++i) u[i] = std::abs(v[i]);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, tau = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    css += u[j];
    const double cand = (css - radius) / static_cast<double>(j + 1);
    if (u[j] - cand > 0.0) tau = cand;
  }
  Eigen::VectorXd w(v.size());
  for (int i = 0; i < v.size(); ++i) {
    const double mag = std::max(std::abs(v[i]) - tau, 0.0);
    w[i] = v[i] >= 0.0 ? mag : -mag;
  }
  return w;
}

BallSelection select_ball(const Dataset& data, int k, const std::vector<int>& m_grid,
                          double lambda, double eta, const ParameterBounds& bounds,
                          const FitConfig& cfg) {
  if (m_grid.empty()) throw std::invalid_argument("select_ball: empty grid");
  for (std::size_t i = 0; i + 1 < m_grid.size(); ++i)
    if (m_grid[i] >= m_grid[i + 1])
      throw std::invalid_argument("select_ball: grid must be strictly increasing");
  if (lambda < 0.0 || eta < 0.0)
    throw std::invalid_argument("select_ball: lambda and eta must be >= 0");

  BallSelection sel;
  for (int m : m_grid) {
    FitResult fit = fit_ball_constrained(data, k, m, bounds, cfg);
    BallCriterion c;
    c.m = m;
    c.nll = fit.final_penalized_nll;
    c.criterion = c.nll + lambda * m;
    sel.grid.push_back(c);
    sel.fits.push_back(std::move(fit));
  }
  double best = sel.grid.front().criterion;
  for (const auto& c : sel.grid) best = std::min(best, c.criterion);
  for (std::size_t i = 0; i < sel.grid.size(); ++i) {
    if (sel.grid[i].criterion <= best + eta) {
      sel.m_hat = sel.grid[i].m;
      sel.fit = sel.fits[i];
      sel.eta_achieved = sel.grid[i].criterion - best;
      break;
    }
  }
  return sel;
}

}  // namespace sgame
