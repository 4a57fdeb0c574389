#include "sgame/verify.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "sgame/bounds.hpp"
#include "sgame/model.hpp"
#include "sgame/parallel.hpp"
#include "sgame/quadrature.hpp"
#include "sgame/rng.hpp"

namespace sgame {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Eigen::MatrixXd random_spd(int q, double eig_lo, double eig_hi, Rng& rng) {
  Eigen::MatrixXd a(q, q);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j) a(i, j) = rng.normal();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::MatrixXd rot = qr.householderQ();
  Eigen::VectorXd ev(q);
  for (int i = 0; i < q; ++i) ev[i] = rng.uniform(eig_lo, eig_hi);
  Eigen::MatrixXd s = rot * ev.asDiagonal() * rot.transpose();
  return 0.5 * (s + s.transpose());
}

SgameParams random_in_class(const ParameterBounds& bounds, int p, int q, Rng& rng) {
  const int k = bounds.k;
  SgameParams psi;
  psi.bounds = bounds;
  psi.gating.intercepts = Eigen::VectorXd(k);
  psi.gating.slopes = Eigen::MatrixXd(k, p);
  for (int c = 0; c < k; ++c) {
    psi.gating.intercepts[c] = rng.uniform(-bounds.a_gamma, bounds.a_gamma);
    for (int j = 0; j < p; ++j)
      psi.gating.slopes(c, j) = rng.uniform(-bounds.a_gamma, bounds.a_gamma) / p;
  }
  psi.experts.intercepts = Eigen::MatrixXd(k, q);
  psi.experts.slopes.resize(k);
  psi.experts.covariances.resize(k);
  for (int c = 0; c < k; ++c) {
    psi.experts.slopes[c] = Eigen::MatrixXd(q, p);
    for (int z = 0; z < q; ++z) {
      psi.experts.intercepts(c, z) = rng.uniform(-bounds.a_beta, bounds.a_beta);
      for (int j = 0; j < p; ++j)
        psi.experts.slopes[c](z, j) = rng.uniform(-bounds.a_beta, bounds.a_beta) / p;
    }
    psi.experts.covariances[c] =
        random_spd(q, 0.5 * bounds.cov_eig_min(), 2.0 * bounds.cov_eig_max(), rng);
  }
  return project_to_bounds(psi);
}

}  // namespace

void ExperimentConfig::validate() const {
  truth.validate();
  kl_method.validate();
  fit_cfg.validate();
  if (replications < 10) throw std::invalid_argument("ExperimentConfig: replications >= 10");
  if (n_grid.empty()) throw std::invalid_argument("ExperimentConfig: empty n grid");
  for (int n : n_grid)
    if (n < 2) throw std::invalid_argument("ExperimentConfig: all n must be >= 2");
  if (const auto* tm = std::get_if<TheoremMinimum>(&lambda_policy); tm && tm->kappa < 148.0)
    throw std::invalid_argument("ExperimentConfig: theorem-minimum policy needs kappa >= 148");
  if (const auto* g = std::get_if<LambdaGrid>(&lambda_policy); g && g->values.empty())
    throw std::invalid_argument("ExperimentConfig: empty lambda grid");
}

bool OracleReport::all_hold() const {
  for (const auto& r : rows)
    if (!r.holds) return false;
  return !rows.empty();
}

std::string OracleReport::to_csv() const {
  std::string out = "n,lambda,rep_count,lhs_mean,lhs_se,rhs,rhs_term1,rhs_term2,rhs_term3,rhs_term4,holds\n";
  for (const auto& r : rows) {
    out += std::to_string(r.n) + "," + fmt_double(r.lambda) + "," + std::to_string(r.rep_count) +
           "," + fmt_double(r.lhs_mean) + "," + fmt_double(r.lhs_se) + "," + fmt_double(r.rhs) +
           "," + fmt_double(r.rhs_term1) + "," + fmt_double(r.rhs_term2) + "," +
           fmt_double(r.rhs_term3) + "," + fmt_double(r.rhs_term4) + "," +
           (r.holds ? "1" : "0") + "\n";
  }
  return out;
}

OracleReport run_oracle_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const SgameParams& truth = cfg.truth;
  const int p = truth.x_dim();
  const int q = truth.y_dim();
  const int k = truth.num_experts();
  const double l1_truth = penalized_l1_norm(truth);

  OracleReport report;
  for (int n : cfg.n_grid) {
    // Fixed design for this n, shared by every replication and lambda.
    Rng drng = Rng::stream(cfg.seed, splitmix64(0xD5ULL) ^ static_cast<std::uint64_t>(n));
    Eigen::MatrixXd design(n, p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j) design(i, j) = drng.uniform01();

    BoundInputs in;
    in.n = n;
    in.p = p;
    in.q = q;
    in.bounds = truth.bounds;

    std::vector<double> lambdas;
    if (const auto* tm = std::get_if<TheoremMinimum>(&cfg.lambda_policy)) {
      in.kappa = tm->kappa;
      lambdas.push_back(lambda_lower_bound(in));
    } else {
      lambdas = std::get<LambdaGrid>(cfg.lambda_policy).values;
    }

    for (double lambda : lambdas) {
      std::vector<double> kls(cfg.replications, 0.0);
      std::vector<char> ok(cfg.replications, 0);
      parallel_for(cfg.replications, cfg.threads, [&](int rep) {
        const std::uint64_t tag =
            splitmix64((static_cast<std::uint64_t>(n) << 20) + static_cast<std::uint64_t>(rep));
        Rng rng = Rng::stream(cfg.seed, tag);
        Eigen::MatrixXd responses(n, q);
        const DensityCache cache(truth);
        for (int i = 0; i < n; ++i)
          responses.row(i) = cache.sample(design.row(i).transpose(), rng).transpose();
        try {
          Dataset data(design, responses);
          FitConfig fc = cfg.fit_cfg;
          fc.seed = splitmix64(cfg.seed ^ tag);
          const FitResult fit = fit_lasso(data, k, lambda, truth.bounds, fc);
          KlMethod method = cfg.kl_method;
          if (method.kind == KlMethod::Kind::MonteCarlo)
            method.seed = splitmix64(cfg.seed ^ tag ^ 0xA11CEULL);  // shared across lambdas
          kls[rep] = kl_n(truth, fit.params, design, method).value;
          ok[rep] = 1;
        } catch (const std::exception&) {
          ok[rep] = 0;
        }
      });

      int good = 0;
      double sum = 0.0, sumsq = 0.0;
      for (int rep = 0; rep < cfg.replications; ++rep) {
        if (!ok[rep]) continue;
        ++good;
        sum += kls[rep];
        sumsq += kls[rep] * kls[rep];
      }
      report.failed_replications += cfg.replications - good;
      if (good == 0) throw std::runtime_error("run_oracle_experiment: every replication failed");
      const double mean = sum / good;
      const double var = good > 1 ? std::max(0.0, (sumsq - good * mean * mean) / (good - 1)) : 0.0;
      const double se = std::sqrt(var / good);

      in.kappa = std::max(in.kappa, 148.0);
      const OracleRhs rhs = oracle_risk_rhs(0.0, l1_truth, in, lambda);
      OracleRow row;
      row.n = n;
      row.lambda = lambda;
      row.rep_count = good;
      row.lhs_mean = mean;
      row.lhs_se = se;
      row.rhs = rhs.total;
      row.rhs_term1 = rhs.oracle_term;
      row.rhs_term2 = rhs.lambda_term;
      row.rhs_term3 = rhs.tail_term;
      row.rhs_term4 = rhs.deviation_term;
      row.holds = mean + 2.0 * se <= rhs.total;
      report.rows.push_back(row);
    }
  }
  return report;
}

std::string SuiteReport::to_json() const {
  nlohmann::json j;
  j["suite"] = suite;
  j["trials"] = trials;
  j["violations"] = violations;
  j["worst_case"] = worst_case;
  j["witness"] = witness;
  j["passed"] = passed;
  return j.dump(2);
}

SuiteReport verify_gradient_envelope(const ParameterBounds& bounds, int q, int p, int trials,
                                     std::uint64_t seed) {
  if (trials < 100) throw std::invalid_argument("verify_gradient_envelope: trials >= 100");
  bounds.validate();
  SuiteReport rep;
  rep.suite = "gradient_envelope";
  rep.trials = trials;
  const double y_cap = bounds.a_beta + 4.0 / std::sqrt(bounds.a_sigma_min);

  Rng rng(seed);
  double worst_ratio = 0.0;
  for (int t = 0; t < trials; ++t) {
    const SgameParams psi = random_in_class(bounds, p, q, rng);
    Eigen::VectorXd x(p);
    for (int j = 0; j < p; ++j) x[j] = rng.uniform01();
    Eigen::VectorXd y(q);
    for (int z = 0; z < q; ++z) y[z] = rng.uniform(-y_cap, y_cap);

    const Eigen::VectorXd grad = log_density_gradient(psi, x, y);
    const double sup = grad.cwiseAbs().maxCoeff();
    const double env = gradient_envelope(y.cwiseAbs().maxCoeff(), bounds, q);
    const double ratio = sup / env;
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      rep.witness = "trial " + std::to_string(t) + ": sup=" + fmt_double(sup) +
                    " envelope=" + fmt_double(env);
    }
    if (sup > env * (1.0 + 1e-12)) ++rep.violations;
  }
  rep.worst_case = worst_ratio;
  rep.passed = rep.violations == 0;
  return rep;
}

SuiteReport verify_tail_bound(const SgameParams& psi, const Eigen::MatrixXd& design, double m_n,
                              int mc_reps, std::uint64_t seed) {
  if (mc_reps < 10000) throw std::invalid_argument("verify_tail_bound: mc_reps >= 10^4");
  psi.validate();
  const int n = static_cast<int>(design.rows());
  const DensityCache cache(psi);

  Rng rng(seed);
  int exceed = 0;
  for (int r = 0; r < mc_reps; ++r) {
    bool over = false;
    for (int i = 0; i < n && !over; ++i) {
      const Eigen::VectorXd y = cache.sample(design.row(i).transpose(), rng);
      if (y.cwiseAbs().maxCoeff() > m_n) over = true;
    }
    if (over) ++exceed;
  }
  const double est = static_cast<double>(exceed) / mc_reps;
  const double se = std::sqrt(std::max(0.0, est * (1.0 - est) / mc_reps));
  const double bound = response_tail_bound(m_n, n, psi.bounds, psi.y_dim());

  SuiteReport rep;
  rep.suite = "tail_bound";
  rep.trials = mc_reps;
  rep.worst_case = est - 3.0 * se - bound;  // > 0 would refute the bound
  rep.violations = est - 3.0 * se <= bound ? 0 : 1;
  rep.witness = "estimate=" + fmt_double(est) + " se=" + fmt_double(se) +
                " bound=" + fmt_double(bound) + " m_n=" + fmt_double(m_n);
  rep.passed = rep.violations == 0;
  return rep;
}

SuiteReport verify_entropy_bound(const SgameParams& psi0, const Eigen::MatrixXd& design,
                                 int mc_reps, std::uint64_t seed) {
  if (mc_reps < 10000) throw std::invalid_argument("verify_entropy_bound: mc_reps >= 10^4");
  psi0.validate();
  const DensityCache cache(psi0);
  const double ln_c = std::log(entropy_constants(psi0.bounds, psi0.y_dim()).c_s0);

  SuiteReport rep;
  rep.suite = "entropy_bound";
  rep.trials = static_cast<int>(design.rows());
  double worst_margin = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < design.rows(); ++i) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
    const Eigen::VectorXd x = design.row(i).transpose();
    double sum = 0.0, sumsq = 0.0;
    for (int r = 0; r < mc_reps; ++r) {
      const double v = cache.log_density(x, cache.sample(x, rng));
      sum += v;
      sumsq += v * v;
    }
    const double mean = sum / mc_reps;
    const double var = std::max(0.0, (sumsq - mc_reps * mean * mean) / (mc_reps - 1.0));
    const double se = std::sqrt(var / mc_reps);
    const double margin = mean - (ln_c + 3.0 * se);  // > 0 refutes the bound
    if (margin > worst_margin) {
      worst_margin = margin;
      rep.witness = "row " + std::to_string(i) + ": estimate=" + fmt_double(mean) +
                    " se=" + fmt_double(se) + " ln_c=" + fmt_double(ln_c);
    }
    if (margin > 0.0) ++rep.violations;
  }
  rep.worst_case = worst_margin;
  rep.passed = rep.violations == 0;
  return rep;
}

SuiteReport verify_product_constant(int trials, std::uint64_t seed) {
  if (trials < 50) throw std::invalid_argument("verify_product_constant: trials >= 50");
  SuiteReport rep;
  rep.suite = "product_constant";
  rep.trials = trials;

  const double cap_sigma = 2.0;  // eigenvalue cap on the precisions
  Rng rng(seed);
  double worst_err = 0.0;
  for (int t = 0; t < trials; ++t) {
    const int q = (t % 2 == 0) ? 1 : 2;
    Eigen::VectorXd a(q), b(q);
    for (int z = 0; z < q; ++z) {
      a[z] = rng.uniform(-2.0, 2.0);
      b[z] = rng.uniform(-2.0, 2.0);
    }
    // Covariance eigenvalues at or above 1/cap_sigma, so precision
    // eigenvalues stay at or below cap_sigma.
    const Eigen::MatrixXd acov = random_spd(q, 1.0 / cap_sigma, 3.0, rng);
    const Eigen::MatrixXd bcov = random_spd(q, 1.0 / cap_sigma, 3.0, rng);
    const double formula = gaussian_product_constant(a, acov, b, bcov);

    const double spread = 9.0 * std::sqrt(3.0) + 2.0;
    double numeric = 0.0;
    if (q == 1) {
      numeric = integrate(
          [&](double y) {
            const double da = y - a[0], db = y - b[0];
            return std::exp(-0.5 * da * da / acov(0, 0)) / std::sqrt(2.0 * M_PI * acov(0, 0)) *
                   std::exp(-0.5 * db * db / bcov(0, 0)) / std::sqrt(2.0 * M_PI * bcov(0, 0));
          },
          -spread, spread, 64);
    } else {
      const Eigen::LLT<Eigen::MatrixXd> la(acov), lb(bcov);
      const double lda = 2.0 * std::log(la.matrixLLT()(0, 0)) + 2.0 * std::log(la.matrixLLT()(1, 1));
      const double ldb = 2.0 * std::log(lb.matrixLLT()(0, 0)) + 2.0 * std::log(lb.matrixLLT()(1, 1));
      numeric = integrate2d(
          [&](double y1, double y2) {
            Eigen::Vector2d y(y1, y2);
            const Eigen::Vector2d da = y - a, db = y - b;
            const double qa = da.dot(la.solve(da));
            const double qb = db.dot(lb.solve(db));
            return std::exp(-0.5 * (qa + 2.0 * std::log(2.0 * M_PI) + lda)) *
                   std::exp(-0.5 * (qb + 2.0 * std::log(2.0 * M_PI) + ldb));
          },
          -spread, spread, -spread, spread, 32);
    }
    const double err = std::abs(numeric - formula);
    if (err > worst_err) {
      worst_err = err;
      rep.witness = "trial " + std::to_string(t) + " (q=" + std::to_string(q) +
                    "): formula=" + fmt_double(formula) + " numeric=" + fmt_double(numeric);
    }
    if (err > 1e-6) ++rep.violations;

    const double cap = std::pow(4.0 * M_PI, -0.5 * q) * std::pow(cap_sigma, 0.5 * q);
    if (formula > cap * (1.0 + 1e-12)) {
      ++rep.violations;
      rep.witness = "trial " + std::to_string(t) + ": formula " + fmt_double(formula) +
                    " exceeds cap " + fmt_double(cap);
    }
  }
  rep.worst_case = worst_err;
  rep.passed = rep.violations == 0;
  return rep;
}

SuiteReport verify_weyl(int trials, int q, std::uint64_t seed) {
  if (trials < 100) throw std::invalid_argument("verify_weyl: trials >= 100");
  SuiteReport rep;
  rep.suite = "weyl";
  rep.trials = trials;

  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    Eigen::MatrixXd a(q, q), b(q, q);
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j) {
        a(i, j) = rng.normal();
        b(i, j) = rng.normal();
      }
    a = 0.5 * (a + a.transpose()).eval();
    b = 0.5 * (b + b.transpose()).eval();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(a, Eigen::EigenvaluesOnly);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eb(b, Eigen::EigenvaluesOnly);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a + b, Eigen::EigenvaluesOnly);
    const double lo_gap = ea.eigenvalues().minCoeff() + eb.eigenvalues().minCoeff() -
                          es.eigenvalues().minCoeff();
    const double hi_gap = es.eigenvalues().maxCoeff() - ea.eigenvalues().maxCoeff() -
                          eb.eigenvalues().maxCoeff();
    const double gap = std::max(lo_gap, hi_gap);  // > 0 violates the inequality
    if (gap > worst) {
      worst = gap;
      rep.witness = "trial " + std::to_string(t) + ": gap=" + fmt_double(gap);
    }
    if (gap > 1e-10) ++rep.violations;
  }
  rep.worst_case = worst;
  rep.passed = rep.violations == 0;
  return rep;
}

SuiteReport verify_em_monotonicity(const std::vector<Dataset>& datasets,
                                   const std::vector<double>& lambdas,
                                   const ParameterBounds& bounds, const FitConfig& cfg) {
  if (datasets.empty() || lambdas.empty())
    throw std::invalid_argument("verify_em_monotonicity: empty inputs");
  SuiteReport rep;
  rep.suite = "em_monotonicity";
  double worst_increase = 0.0;
  int runs = 0;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    for (double lambda : lambdas) {
      const FitResult fit = fit_lasso(datasets[d], bounds.k, lambda, bounds, cfg);
      ++runs;
      const auto& tr = fit.penalized_nll_trace;
      for (std::size_t i = 1; i < tr.size(); ++i) {
        const double inc = tr[i] - tr[i - 1];
        if (inc > worst_increase) {
          worst_increase = inc;
          rep.witness = "dataset " + std::to_string(d) + " lambda=" + fmt_double(lambda) +
                        " step " + std::to_string(i) + ": increase=" + fmt_double(inc);
        }
        if (inc > 1e-8) ++rep.violations;
      }
    }
  }
  rep.trials = runs;
  rep.worst_case = worst_increase;
  rep.passed = rep.violations == 0;
  return rep;
}

SgameParams make_default_truth() {
  const int p = 10, q = 1, k = 2;
  ParameterBounds bounds;
  bounds.a_gamma = 2.0;
  bounds.a_beta = 4.0;
  bounds.a_sigma_min = 0.5;
  bounds.a_sigma_max = 4.0;
  bounds.k = k;

  SgameParams psi;
  psi.bounds = bounds;
  psi.gating = GatingParams::zeros(k, p);
  psi.gating.intercepts << 0.5, -0.5;
  psi.gating.slopes(0, 0) = 1.0;
  psi.gating.slopes(1, 0) = -1.0;

  psi.experts = ExpertParams::zeros(k, p, q);
  psi.experts.intercepts(0, 0) = -2.0;
  psi.experts.intercepts(1, 0) = 2.0;
  psi.experts.slopes[0](0, 0) = 1.5;
  psi.experts.slopes[1](0, 0) = -1.5;
  psi.experts.covariances[0](0, 0) = 0.25;
  psi.experts.covariances[1](0, 0) = 0.25;
  psi.validate();
  return psi;
}

ExperimentConfig make_default_experiment_config(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.truth = make_default_truth();
  cfg.n_grid = {100, 200, 400};
  cfg.replications = 50;
  cfg.lambda_policy = TheoremMinimum{148.0};
  cfg.kl_method = KlMethod::monte_carlo(20000, 0);
  cfg.seed = seed;
  cfg.fit_cfg.restarts = 2;
  cfg.fit_cfg.max_em_iters = 200;
  cfg.threads = 1;
  return cfg;
}

}  // namespace sgame
