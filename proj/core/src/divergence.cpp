#include "sgame/divergence.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "sgame/model.hpp"
#include "sgame/quadrature.hpp"
#include "sgame/rng.hpp"

namespace sgame {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

double log_det_spd(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  const Eigen::MatrixXd& l = llt.matrixLLT();
  double ld = 0.0;
  for (int i = 0; i < l.rows(); ++i) ld += 2.0 * std::log(l(i, i));
  return ld;
}

Eigen::LLT<Eigen::MatrixXd> checked_llt(const Eigen::MatrixXd& s, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument(std::string(what) + ": matrix not positive definite");
  return llt;
}

}  // namespace

double quadrature_truncation(const SgameParams& truth, const SgameParams* candidate,
                             const Eigen::VectorXd& x, double tail) {
  const DensityCache tc(truth);
  double mean_mag = 0.0;
  double var_max = 0.0;
  for (int k = 0; k < truth.num_experts(); ++k) {
    mean_mag = std::max(mean_mag, std::abs(tc.mean(k, x)[0]));
    var_max = std::max(var_max, truth.experts.covariances[k](0, 0));
  }
  if (candidate != nullptr) {
    const DensityCache cc(*candidate);
    for (int k = 0; k < candidate->num_experts(); ++k) {
      mean_mag = std::max(mean_mag, std::abs(cc.mean(k, x)[0]));
      var_max = std::max(var_max, candidate->experts.covariances[k](0, 0));
    }
  }
  const double z = normal_tail_halfwidth(tail);
  return mean_mag + z * std::sqrt(var_max);
}

KlEstimate kl_conditional(const SgameParams& truth, const SgameParams& candidate,
                          const Eigen::VectorXd& x, const KlMethod& method) {
  method.validate();
  if (truth.x_dim() != candidate.x_dim() || truth.y_dim() != candidate.y_dim())
    throw std::invalid_argument("kl_conditional: parameter dimensions disagree");
  if (x.size() != truth.x_dim())
    throw std::invalid_argument("kl_conditional: x dimension disagrees");

  const DensityCache tc(truth);
  const DensityCache cc(candidate);

  if (method.kind == KlMethod::Kind::Quadrature) {
    if (truth.y_dim() != 1)
      throw std::invalid_argument("kl_conditional: quadrature requires q = 1");
    const double m = quadrature_truncation(truth, &candidate, x, method.truncation_tail);
    const int order = 20;
    const int panels = std::max(4, (method.nodes + order - 1) / order);
    Eigen::VectorXd y(1);
    const double value = integrate(
        [&](double t) {
          y[0] = t;
          const double lt = tc.log_density(x, y);
          return (lt - cc.log_density(x, y)) * std::exp(lt);
        },
        -m, m, panels, order);
    return {value, 0.0};
  }

  Rng rng(method.seed);
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < method.samples; ++i) {
    const Eigen::VectorXd y = tc.sample(x, rng);
    const double v = tc.log_density(x, y) - cc.log_density(x, y);
    sum += v;
    sumsq += v * v;
  }
  const double n = static_cast<double>(method.samples);
  const double mean = sum / n;
  const double var = std::max(0.0, (sumsq - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n)};
}

KlEstimate kl_n(const SgameParams& truth, const SgameParams& candidate,
                const Eigen::MatrixXd& design, const KlMethod& method) {
  if (design.rows() < 1) throw std::invalid_argument("kl_n: empty design");
  if ((design.array() < 0.0).any() || (design.array() > 1.0).any())
    throw std::invalid_argument("kl_n: design entries must lie in [0,1]");
  const int n = static_cast<int>(design.rows());
  double val = 0.0, var = 0.0;
  for (int i = 0; i < n; ++i) {
    KlMethod row = method;
    if (method.kind == KlMethod::Kind::MonteCarlo)
      row.seed = splitmix64(method.seed ^ splitmix64(static_cast<std::uint64_t>(i) + 1));
    const KlEstimate e = kl_conditional(truth, candidate, design.row(i).transpose(), row);
    val += e.value;
    var += e.std_error * e.std_error;
  }
  return {val / n, std::sqrt(var) / n};
}

double gaussian_kl_closed_form(const Eigen::VectorXd& m1, const Eigen::MatrixXd& s1,
                               const Eigen::VectorXd& m2, const Eigen::MatrixXd& s2) {
  const int q = static_cast<int>(m1.size());
  if (m2.size() != q || s1.rows() != q || s2.rows() != q)
    throw std::invalid_argument("gaussian_kl_closed_form: dimensions disagree");
  const auto llt1 = checked_llt(s1, "gaussian_kl_closed_form(s1)");
  const auto llt2 = checked_llt(s2, "gaussian_kl_closed_form(s2)");
  const double tr = llt2.solve(s1).trace();
  const Eigen::VectorXd d = m2 - m1;
  const double quad = d.dot(llt2.solve(d));
  return 0.5 * (tr + quad - q + log_det_spd(llt2) - log_det_spd(llt1));
}

double gaussian_product_constant(const Eigen::VectorXd& a, const Eigen::MatrixXd& a_cov,
                                 const Eigen::VectorXd& b, const Eigen::MatrixXd& b_cov) {
  const int q = static_cast<int>(a.size());
  if (b.size() != q || a_cov.rows() != q || b_cov.rows() != q)
    throw std::invalid_argument("gaussian_product_constant: dimensions disagree");
  checked_llt(a_cov, "gaussian_product_constant(A)");
  checked_llt(b_cov, "gaussian_product_constant(B)");
  const auto llt = checked_llt(a_cov + b_cov, "gaussian_product_constant(A+B)");
  const Eigen::VectorXd d = a - b;
  const double quad = d.dot(llt.solve(d));
  return std::exp(-0.5 * (q * kLogTwoPi + log_det_spd(llt) + quad));
}

EntropyConstants entropy_constants(const ParameterBounds& bounds, int q) {
  bounds.validate();
  if (q < 1) throw std::invalid_argument("entropy_constants: q must be >= 1");
  const double c = std::pow(4.0 * M_PI, -0.5 * q) * std::pow(bounds.a_sigma_max, 0.5 * q);
  return {c, std::max(0.0, std::log(c))};
}

}  // namespace sgame
