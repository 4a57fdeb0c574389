// Acceptance suite: one criterion per function, each printing a single
// pass/fail line with its runtime. Run with no arguments for the full
// suite, or with a criterion number (1..11) to run one.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "sgame/bounds.hpp"
#include "sgame/cli.hpp"
#include "sgame/divergence.hpp"
#include "sgame/estimator.hpp"
#include "sgame/io.hpp"
#include "sgame/model.hpp"
#include "sgame/quadrature.hpp"
#include "sgame/verify.hpp"
#include "../test_helpers.hpp"

using namespace sgame;
using sgame::test::random_in_class;
using sgame::test::single_expert;

namespace {

int g_checks_failed = 0;

void expect(bool ok, const std::string& what) {
  if (!ok) {
    std::printf("    check failed: %s\n", what.c_str());
    ++g_checks_failed;
  }
}

// Central finite differences in the flat gradient layout; covariance
// off-diagonals perturbed symmetrically and halved.
Eigen::VectorXd fd_gradient(const SgameParams& psi, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& y, double h) {
  const int k = psi.num_experts();
  const int p = psi.x_dim();
  const int q = psi.y_dim();
  Eigen::VectorXd grad(flat_gradient_size(k, p, q));
  int idx = 0;
  auto diff = [&](auto&& bump) {
    SgameParams hi = psi, lo = psi;
    bump(hi, h);
    bump(lo, -h);
    return (log_density(hi, x, y) - log_density(lo, x, y)) / (2.0 * h);
  };
  for (int c = 0; c < k; ++c)
    grad[idx++] = diff([&](SgameParams& s, double d) { s.gating.intercepts[c] += d; });
  for (int c = 0; c < k; ++c)
    for (int j = 0; j < p; ++j)
      grad[idx++] = diff([&](SgameParams& s, double d) { s.gating.slopes(c, j) += d; });
  for (int c = 0; c < k; ++c)
    for (int z = 0; z < q; ++z)
      grad[idx++] = diff([&](SgameParams& s, double d) { s.experts.intercepts(c, z) += d; });
  for (int c = 0; c < k; ++c)
    for (int z = 0; z < q; ++z)
      for (int j = 0; j < p; ++j)
        grad[idx++] = diff([&](SgameParams& s, double d) { s.experts.slopes[c](z, j) += d; });
  for (int c = 0; c < k; ++c)
    for (int z1 = 0; z1 < q; ++z1)
      for (int z2 = 0; z2 < q; ++z2) {
        if (z1 == z2) {
          grad[idx++] =
              diff([&](SgameParams& s, double d) { s.experts.covariances[c](z1, z1) += d; });
        } else {
          grad[idx++] = 0.5 * diff([&](SgameParams& s, double d) {
            s.experts.covariances[c](z1, z2) += d;
            s.experts.covariances[c](z2, z1) += d;
          });
        }
      }
  return grad;
}

ParameterBounds shape_box(int k) {
  ParameterBounds b;
  b.a_gamma = 2.0;
  b.a_beta = 4.0;
  b.a_sigma_min = 0.5;
  b.a_sigma_max = 4.0;
  b.k = k;
  return b;
}

// ---- criterion 1: gradient envelope + finite differences --------------------

bool criterion_1() {
  const struct {
    int q, k, p;
  } shapes[] = {{1, 2, 5}, {2, 3, 8}};
  for (const auto& s : shapes) {
    const ParameterBounds b = shape_box(s.k);
    const SuiteReport rep = verify_gradient_envelope(b, s.q, s.p, 1000, 1000 + s.k);
    expect(rep.violations == 0, "envelope violations at shape (" + std::to_string(s.q) + "," +
                                    std::to_string(s.k) + "," + std::to_string(s.p) + ")");
    expect(rep.worst_case <= 1.0, "envelope ratio above one");

    Rng rng(2000 + s.k);
    const double y_cap = b.a_beta + 4.0 / std::sqrt(b.a_sigma_min);
    for (int t = 0; t < 500; ++t) {
      const SgameParams psi = random_in_class(b, s.p, s.q, rng);
      Eigen::VectorXd x(s.p), y(s.q);
      for (int j = 0; j < s.p; ++j) x[j] = rng.uniform01();
      for (int z = 0; z < s.q; ++z) y[z] = rng.uniform(-y_cap, y_cap);
      const Eigen::VectorXd an = log_density_gradient(psi, x, y);
      const Eigen::VectorXd fd = fd_gradient(psi, x, y, 1e-5);
      const double rel =
          (an - fd).cwiseAbs().maxCoeff() / std::max(1.0, an.cwiseAbs().maxCoeff());
      if (rel > 1e-5) {
        expect(false, "finite-difference mismatch, rel=" + std::to_string(rel));
        return false;
      }
    }
  }
  return g_checks_failed == 0;
}

// ---- criterion 2: density normalization --------------------------------------

bool criterion_2() {
  const ParameterBounds b = shape_box(2);
  Rng rng(31);
  for (int t = 0; t < 100; ++t) {
    const SgameParams psi = random_in_class(b, 4, 1, rng);
    Eigen::VectorXd x(4);
    for (int j = 0; j < 4; ++j) x[j] = rng.uniform01();
    const DensityCache cache(psi);
    const double m = b.a_beta + 9.0 * std::sqrt(b.cov_eig_max());
    Eigen::VectorXd y(1);
    const double mass = integrate(
        [&](double v) {
          y[0] = v;
          return std::exp(cache.log_density(x, y));
        },
        -m, m, 64);
    expect(std::abs(mass - 1.0) <= 1e-6, "normalization off by " + std::to_string(mass - 1.0));
  }
  return g_checks_failed == 0;
}

// ---- criterion 3: KL oracles --------------------------------------------------

bool criterion_3() {
  Rng rng(37);
  for (int t = 0; t < 30; ++t) {
    const double m1 = rng.uniform(-1.5, 1.5), m2 = rng.uniform(-1.5, 1.5);
    const double v1 = rng.uniform(0.3, 2.5), v2 = rng.uniform(0.3, 2.5);
    SgameParams tr = single_expert(m1, v1);
    SgameParams ca = single_expert(m2, v2);
    tr.bounds.a_sigma_min = ca.bounds.a_sigma_min = 0.05;
    tr.bounds.a_sigma_max = ca.bounds.a_sigma_max = 20.0;
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, rng.uniform01());
    const double quad = kl_conditional(tr, ca, x, KlMethod::quadrature(1920)).value;
    Eigen::VectorXd mu1(1), mu2(1);
    mu1 << m1;
    mu2 << m2;
    const double exact = gaussian_kl_closed_form(mu1, Eigen::MatrixXd::Constant(1, 1, v1), mu2,
                                                 Eigen::MatrixXd::Constant(1, 1, v2));
    expect(std::abs(quad - exact) <= 1e-6, "K=1 KL vs closed form, err=" +
                                               std::to_string(std::abs(quad - exact)));
  }
  const ParameterBounds b = shape_box(2);
  for (int t = 0; t < 10; ++t) {
    const SgameParams psi = random_in_class(b, 3, 1, rng);
    Eigen::VectorXd x(3);
    for (int j = 0; j < 3; ++j) x[j] = rng.uniform01();
    const double self = kl_conditional(psi, psi, x, KlMethod::quadrature(1280)).value;
    expect(std::abs(self) <= 1e-8, "KL(s,s) nonzero: " + std::to_string(self));
  }
  return g_checks_failed == 0;
}

// ---- criterion 4: product-of-Gaussians identity ----------------------------------

bool criterion_4() {
  const SuiteReport rep = verify_product_constant(50, 41);
  expect(rep.violations == 0, "product-constant violations: " + std::to_string(rep.violations));
  expect(rep.worst_case <= 1e-6, "quadrature/formula error " + std::to_string(rep.worst_case));
  return g_checks_failed == 0;
}

// ---- criterion 5: Chernoff and response tail bounds ---------------------------

bool criterion_5() {
  for (double t = 0.5; t <= 4.0 + 1e-12; t += 0.5) {
    const double exact = 0.5 * std::erfc(t / std::sqrt(2.0));
    expect(chernoff_gaussian_tail(t) >= exact, "Chernoff bound undercut at t=" +
                                                   std::to_string(t));
  }

  // near-active case: unit Gaussian, m_n = 3
  SgameParams unit = single_expert(0.0, 1.0);
  unit.bounds.a_gamma = 1.0;
  unit.bounds.a_beta = 1.0;
  unit.bounds.a_sigma_min = 1.0;
  unit.bounds.a_sigma_max = 1.0;
  Eigen::MatrixXd one(1, 1);
  one << 0.5;
  const SuiteReport near = verify_tail_bound(unit, one, 3.0, 100000, 43);
  expect(near.passed, "tail bound failed on the unit-Gaussian config");

  // default config at the recommended truncation level
  const SgameParams truth = make_default_truth();
  Rng rng(47);
  const int n = 10;
  Eigen::MatrixXd design(n, truth.x_dim());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < truth.x_dim(); ++j) design(i, j) = rng.uniform01();
  const double m_n = truncation_level_mn(n, truth.bounds);
  const SuiteReport rep = verify_tail_bound(truth, design, m_n, 100000, 53);
  expect(rep.passed, "tail bound failed at the default config");
  return g_checks_failed == 0;
}

// ---- criterion 6: Weyl inequality ---------------------------------------------

bool criterion_6() {
  const SuiteReport rep = verify_weyl(1000, 4, 59);
  expect(rep.violations == 0, "Weyl violations: " + std::to_string(rep.violations));
  expect(rep.worst_case <= 1e-10, "Weyl worst gap " + std::to_string(rep.worst_case));
  return g_checks_failed == 0;
}

// ---- criterion 7: bounds consistency -------------------------------------------

bool criterion_7() {
  Rng rng(61);
  for (int t = 0; t < 1000; ++t) {
    ParameterBounds b;
    b.a_gamma = rng.uniform(0.05, 3.0);
    b.a_beta = rng.uniform(0.05, 3.0);
    b.a_sigma_min = rng.uniform(0.1, 2.0);
    b.a_sigma_max = b.a_sigma_min + rng.uniform(0.0, 4.0);
    b.k = 1 + static_cast<int>(rng.uniform01() * 4);
    const int n = 2 + static_cast<int>(rng.uniform01() * 100000);
    const int q = 1 + t % 3;

    const double mn = truncation_level_mn(n, b);
    expect(envelope_bn_prime(n, b, q) >= envelope_bn(mn, b, q) * (1 - 1e-12),
           "B'_n below B_n(M_n)");
    const double identity =
        std::exp(-(mn * mn - 2.0 * mn * b.a_beta) / (4.0 * b.a_sigma_max)) * std::sqrt(1.0 * n);
    expect(std::abs(identity - 1.0 / std::sqrt(1.0 * n)) <= 1e-10 / std::sqrt(1.0 * n) + 1e-14,
           "truncation identity off");
  }

  BoundInputs base;
  base.n = 200;
  base.p = 10;
  base.q = 1;
  base.bounds = shape_box(2);
  const double v0 = lambda_lower_bound(base);
  BoundInputs v = base;
  v.kappa = 200.0;
  expect(lambda_lower_bound(v) > v0, "lambda_min not increasing in kappa");
  v = base;
  v.p = 50;
  expect(lambda_lower_bound(v) > v0, "lambda_min not increasing in p");
  v = base;
  v.q = 2;
  expect(lambda_lower_bound(v) > v0, "lambda_min not increasing in q");
  v = base;
  v.bounds.k = 3;
  expect(lambda_lower_bound(v) > v0, "lambda_min not increasing in K");
  // the n direction acts through ln n: compare at a fixed 1/sqrt(n) scale
  v = base;
  v.n = 2000;
  expect(std::sqrt(2000.0) * lambda_lower_bound(v) > std::sqrt(200.0) * v0,
         "sqrt(n)-scaled lambda_min not increasing in n");
  return g_checks_failed == 0;
}

// ---- criterion 8: estimator contract -------------------------------------------

Dataset simulate_with_labels(const SgameParams& truth, int n, std::uint64_t seed,
                             std::vector<int>* labels) {
  Rng rng(seed);
  const int p = truth.x_dim();
  const int q = truth.y_dim();
  Eigen::MatrixXd x(n, p), y(n, q);
  std::vector<Eigen::LLT<Eigen::MatrixXd>> llts;
  for (const auto& c : truth.experts.covariances) llts.emplace_back(c);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) x(i, j) = rng.uniform01();
    const Eigen::VectorXd g = softmax_gates(truth.gating, x.row(i).transpose());
    const double u = rng.uniform01();
    int pick = g.size() - 1;
    double acc = 0.0;
    for (int c = 0; c < g.size(); ++c) {
      acc += g[c];
      if (u < acc) {
        pick = c;
        break;
      }
    }
    if (labels) labels->push_back(pick);
    Eigen::VectorXd zvec(q);
    for (int z = 0; z < q; ++z) zvec[z] = rng.normal();
    y.row(i) = (truth.experts.intercepts.row(pick).transpose() +
                truth.experts.slopes[pick] * x.row(i).transpose() +
                llts[pick].matrixL() * zvec)
                   .transpose();
  }
  return Dataset(std::move(x), std::move(y));
}

bool criterion_8() {
  const SgameParams truth = make_default_truth();

  // data-driven lambda_max: threshold at which every slope stays zero
  std::vector<int> labels;
  const Dataset big = simulate_with_labels(truth, 2000, 67, &labels);
  double lmax = 0.0;
  const double ybar = big.responses.col(0).mean();
  for (int j = 0; j < big.x_dim(); ++j) {
    const double s =
        (big.design.col(j).array() * (big.responses.col(0).array() - ybar)).mean() *
        truth.bounds.a_sigma_max;
    lmax = std::max(lmax, std::abs(s));
  }

  // twenty fits across datasets and the lambda span: monotone traces
  int fits_done = 0;
  for (int d = 0; d < 7 && fits_done < 20; ++d) {
    const Dataset data = simulate_with_labels(truth, 150, 71 + d, nullptr);
    for (double lam : {0.0, lmax / 10.0, lmax}) {
      if (fits_done >= 20) break;
      FitConfig cfg;
      cfg.restarts = 2;
      cfg.max_em_iters = 150;
      cfg.seed = 100 + d;
      const FitResult fit = fit_lasso(data, 2, lam, truth.bounds, cfg);
      ++fits_done;
      for (std::size_t i = 1; i < fit.penalized_nll_trace.size(); ++i)
        expect(fit.penalized_nll_trace[i] <= fit.penalized_nll_trace[i - 1] + 1e-8,
               "trace increase in fit " + std::to_string(fits_done));
      if (lam > 0.0) {
        int zeros = 0;
        for (const auto& s : fit.params.experts.slopes)
          zeros += static_cast<int>((s.array() == 0.0).count());
        zeros += static_cast<int>((fit.params.gating.slopes.array() == 0.0).count());
        expect(zeros > 0, "no exact zeros at positive lambda");
      }
    }
  }
  expect(fits_done == 20, "expected 20 fits");

  // active set nonincreasing along a 5-point grid at a fixed seed
  {
    const Dataset data = simulate_with_labels(truth, 400, 79, nullptr);
    std::vector<int> counts;
    for (double lam : {0.0, lmax / 100.0, lmax / 10.0, lmax / 2.0, lmax}) {
      FitConfig cfg;
      cfg.restarts = 1;
      cfg.max_em_iters = 100;
      cfg.seed = 11;
      const FitResult fit = fit_lasso(data, 2, lam, truth.bounds, cfg);
      int active = static_cast<int>(fit.active_gating.cast<int>().sum());
      for (const auto& m : fit.active_experts) active += static_cast<int>(m.cast<int>().sum());
      counts.push_back(active);
    }
    for (std::size_t i = 1; i < counts.size(); ++i)
      expect(counts[i] <= counts[i - 1], "active set grew from grid point " +
                                             std::to_string(i - 1) + " to " + std::to_string(i));
  }

  // lambda = 0, K = 1 equals ordinary least squares to 1e-6
  {
    Rng rng(83);
    const int n = 500, p = 3;
    Eigen::MatrixXd x(n, p), y(n, 1);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) x(i, j) = rng.uniform01();
      y(i, 0) = 0.8 - 1.2 * x(i, 0) + 0.4 * x(i, 2) + 0.3 * rng.normal();
    }
    const Dataset data(x, y);
    ParameterBounds b1;
    b1.a_gamma = 5.0;
    b1.a_beta = 10.0;
    b1.a_sigma_min = 0.05;
    b1.a_sigma_max = 50.0;
    b1.k = 1;
    FitConfig cfg;
    cfg.restarts = 1;
    cfg.inner_iters = 400;
    cfg.em_tol = 1e-13;
    cfg.max_em_iters = 60;
    const FitResult fit = fit_lasso(data, 1, 0.0, b1, cfg);
    Eigen::MatrixXd xt(n, p + 1);
    xt.col(0).setOnes();
    xt.rightCols(p) = x;
    const Eigen::VectorXd beta = (xt.transpose() * xt).ldlt().solve(xt.transpose() * y.col(0));
    expect(std::abs(fit.params.experts.intercepts(0, 0) - beta[0]) <= 1e-6,
           "K=1 intercept differs from OLS");
    for (int j = 0; j < p; ++j)
      expect(std::abs(fit.params.experts.slopes[0](0, j) - beta[j + 1]) <= 1e-6,
             "K=1 slope differs from OLS");
  }

  // recovery at n = 2000 against the true-label OLS oracle. Balanced gates
  // and 10-sigma mean separation keep both per-component OLS errors and the
  // EM assignment error well inside the 0.1 budget.
  {
    SgameParams rec = truth;
    rec.bounds.a_sigma_min = 1.0;
    rec.bounds.a_sigma_max = 50.0;
    rec.gating.intercepts << 0.0, 0.0;
    rec.experts.covariances[0](0, 0) = 0.04;
    rec.experts.covariances[1](0, 0) = 0.04;
    std::vector<int> rec_labels;
    const Dataset rdata = simulate_with_labels(rec, 2000, 97, &rec_labels);

    FitConfig cfg;
    cfg.restarts = 3;
    cfg.max_em_iters = 300;
    cfg.seed = 5;
    const FitResult fit = fit_lasso(rdata, 2, 0.0, rec.bounds, cfg);

    // per-component OLS using the true labels
    std::vector<Eigen::VectorXd> oracle;
    for (int c = 0; c < 2; ++c) {
      std::vector<int> rows;
      for (int i = 0; i < rdata.size(); ++i)
        if (rec_labels[i] == c) rows.push_back(i);
      Eigen::MatrixXd xt(rows.size(), rdata.x_dim() + 1);
      Eigen::VectorXd yy(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        xt(r, 0) = 1.0;
        xt.row(r).tail(rdata.x_dim()) = rdata.design.row(rows[r]);
        yy[r] = rdata.responses(rows[r], 0);
      }
      oracle.push_back((xt.transpose() * xt).ldlt().solve(xt.transpose() * yy));
    }

    // match fitted components to the truth by intercept sign
    const int fit0 = fit.params.experts.intercepts(0, 0) < 0 ? 0 : 1;
    const int map[2] = {fit0, 1 - fit0};
    for (int c = 0; c < 2; ++c) {
      const int fc = map[c];
      const double di =
          std::abs(fit.params.experts.intercepts(fc, 0) - rec.experts.intercepts(c, 0));
      expect(di <= 0.1, "component " + std::to_string(c) + " intercept off by " +
                            std::to_string(di));
      double dmax = 0.0, omax = 0.0;
      for (int j = 0; j < rdata.x_dim(); ++j) {
        dmax = std::max(dmax, std::abs(fit.params.experts.slopes[fc](0, j) -
                                       rec.experts.slopes[c](0, j)));
        omax = std::max(omax, std::abs(oracle[c][j + 1] - rec.experts.slopes[c](0, j)));
      }
      expect(dmax <= 0.1, "component " + std::to_string(c) + " slope off by " +
                              std::to_string(dmax));
      expect(omax <= 0.1, "true-label OLS oracle itself off by " + std::to_string(omax));
    }
  }
  return g_checks_failed == 0;
}

// ---- criterion 9: oracle-inequality experiment ---------------------------------

bool criterion_9() {
  ExperimentConfig cfg = make_default_experiment_config(2026);
  cfg.threads = 2;
  const OracleReport report = run_oracle_experiment(cfg);
  expect(report.rows.size() == 3, "expected one row per n");
  for (const auto& row : report.rows) {
    expect(row.rep_count == 50, "lost replications at n=" + std::to_string(row.n));
    expect(row.holds, "oracle inequality violated at n=" + std::to_string(row.n));
    std::printf("    n=%-5d lhs=%.4f (se %.4f)  rhs=%.3e  slack factor %.1e\n", row.n,
                row.lhs_mean, row.lhs_se, row.rhs,
                row.rhs / std::max(row.lhs_mean + 2 * row.lhs_se, 1e-300));
  }
  return g_checks_failed == 0;
}

// ---- criterion 10: l1-ball selection -------------------------------------------

bool criterion_10() {
  const SgameParams truth = make_default_truth();
  const Dataset data = simulate_with_labels(truth, 300, 89, nullptr);
  FitConfig cfg;
  cfg.restarts = 2;
  cfg.max_em_iters = 120;
  cfg.seed = 7;
  const double lambda = 0.05;
  const std::vector<int> grid{1, 2, 4, 8};
  const BallSelection sel = select_ball(data, 2, grid, lambda, 0.0, truth.bounds, cfg);

  // independent recomputation of every criterion value from the fits
  int best_m = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sel.fits.size(); ++i) {
    const double crit = penalized_nll(sel.fits[i].params, data, 0.0) + lambda * grid[i];
    expect(std::abs(crit - sel.grid[i].criterion) <= 1e-12, "criterion recomputation differs");
    if (crit < best - 1e-15) {
      best = crit;
      best_m = grid[i];
    }
  }
  expect(sel.m_hat == best_m, "selected m differs from the recomputed argmin");

  // the selection inequality with the reported eta
  const double chosen = penalized_nll(sel.fit.params, data, 0.0) + lambda * sel.m_hat;
  expect(chosen <= best + sel.eta_achieved + 1e-12, "selection inequality violated");
  expect(penalized_l1_norm(sel.fit.params) <= sel.m_hat + 1e-10, "ball constraint violated");

  // smallest-m tie-breaking with a generous slack
  const BallSelection lax = select_ball(data, 2, grid, lambda, 1e9, truth.bounds, cfg);
  expect(lax.m_hat == 1, "slack selection did not choose the smallest radius");
  return g_checks_failed == 0;
}

// ---- criterion 11: byte-identical CLI artifacts --------------------------------

bool criterion_11() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "sgame_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = SGAME_CLI_PATH;

  const auto run = [&](const std::string& args) {
    const std::string cmd = cli + " " + args + " 2>/dev/null";
    return std::system(cmd.c_str());
  };
  const auto slurp = [&](const fs::path& p) { return read_text_file(p.string()); };

  write_text_file((dir / "truth.json").string(),
                  params_to_json(make_default_truth()).dump(2));
  write_text_file((dir / "exp.json").string(),
                  R"({"n_grid": [40], "replications": 10, "kl_samples": 1000,)"
                  R"( "fit": {"restarts": 1, "max_em_iters": 30}})");

  const std::string truth = (dir / "truth.json").string();
  for (int r = 0; r < 2; ++r) {
    const std::string tag = std::to_string(r);
    expect(run("simulate --psi0 " + truth + " --n 60 --seed 11 --out " +
               (dir / ("data" + tag + ".csv")).string()) == 0,
           "simulate run failed");
    expect(run("fit --data " + (dir / ("data" + tag + ".csv")).string() +
               " --k 2 --lambda 0.05 --seed 13 --out " +
               (dir / ("fit" + tag + ".json")).string()) == 0,
           "fit run failed");
    expect(run("experiment --config " + (dir / "exp.json").string() + " --seed 17 --out " +
               (dir / ("exp" + tag + ".csv")).string()) == 0,
           "experiment run failed");
  }
  expect(slurp(dir / "data0.csv") == slurp(dir / "data1.csv"), "simulate bytes differ");
  expect(slurp(dir / "data0.csv.meta.json") == slurp(dir / "data1.csv.meta.json"),
         "simulate sidecar bytes differ");
  expect(slurp(dir / "fit0.json") == slurp(dir / "fit1.json"), "fit bytes differ");
  expect(slurp(dir / "exp0.csv") == slurp(dir / "exp1.csv"), "experiment bytes differ");
  fs::remove_all(dir);
  return g_checks_failed == 0;
}

struct Criterion {
  int id;
  const char* name;
  std::function<bool()> fn;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "gradient envelope and finite-difference agreement", criterion_1},
      {2, "density normalization by quadrature", criterion_2},
      {3, "KL oracles (closed form, self-distance)", criterion_3},
      {4, "product-of-Gaussians constant", criterion_4},
      {5, "Chernoff and response tail bounds", criterion_5},
      {6, "Weyl eigenvalue inequality", criterion_6},
      {7, "bound constants consistency", criterion_7},
      {8, "estimator contract (traces, sparsity, OLS, recovery)", criterion_8},
      {9, "oracle risk inequality at desk scale", criterion_9},
      {10, "l1-ball radius selection", criterion_10},
      {11, "byte-identical CLI artifacts", criterion_11},
  };

  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);

  bool all_ok = true;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    g_checks_failed = 0;
    const auto start = std::chrono::steady_clock::now();
    const bool ok = c.fn();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] criterion %2d: %s (%.1fs)\n", ok ? "PASS" : "FAIL", c.id, c.name, secs);
    std::fflush(stdout);
    all_ok = all_ok && ok;
  }
  return all_ok ? 0 : 1;
}
