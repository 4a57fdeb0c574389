#include "sgame/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "sgame/bounds.hpp"
#include "sgame/divergence.hpp"
#include "sgame/estimator.hpp"
#include "sgame/io.hpp"
#include "sgame/model.hpp"
#include "sgame/rng.hpp"
#include "sgame/verify.hpp"

namespace sgame {

namespace {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("SGAME_LOG");
  if (env == nullptr) return LogLevel::Info;
  const std::string v(env);
  if (v == "error") return LogLevel::Error;
  if (v == "debug") return LogLevel::Debug;
  return LogLevel::Info;
}

void log_line(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) <= static_cast<int>(log_level()))
    std::cerr << "[sgame] " << msg << "\n";
}

nlohmann::json load_config(const std::string& path) {
  return nlohmann::json::parse(read_text_file(path));
}

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> keys,
                         const char* what) {
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known)
      throw std::invalid_argument(std::string(what) + " config: unknown key '" + key + "'");
  }
}

ParameterBounds default_bounds(int k) {
  ParameterBounds b;
  b.a_gamma = 2.0;
  b.a_beta = 4.0;
  b.a_sigma_min = 0.5;
  b.a_sigma_max = 4.0;
  b.k = k;
  return b;
}

FitConfig fit_config_from_json(const nlohmann::json& j) {
  reject_unknown_keys(
      j, {"max_em_iters", "em_tol", "inner_iters", "restarts", "seed", "init_strategy"}, "fit");
  FitConfig cfg;
  if (j.contains("max_em_iters")) cfg.max_em_iters = j["max_em_iters"].get<int>();
  if (j.contains("em_tol")) cfg.em_tol = j["em_tol"].get<double>();
  if (j.contains("inner_iters")) cfg.inner_iters = j["inner_iters"].get<int>();
  if (j.contains("restarts")) cfg.restarts = j["restarts"].get<int>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("init_strategy")) {
    const std::string s = j["init_strategy"].get<std::string>();
    if (s == "kmeans")
      cfg.init_strategy = InitStrategy::KMeansResponsibilities;
    else if (s == "random")
      cfg.init_strategy = InitStrategy::RandomSoftAssign;
    else
      throw std::invalid_argument("fit config: init_strategy must be 'kmeans' or 'random'");
  }
  cfg.validate();
  return cfg;
}

// ---- simulate ---------------------------------------------------------------

int cmd_simulate(const std::string& config_path, const std::string& psi0_path, int n,
                 std::uint64_t seed, const std::string& out) {
  nlohmann::json psi0_json;
  int n_resolved = n;
  if (!config_path.empty()) {
    const nlohmann::json cfg = load_config(config_path);
    reject_unknown_keys(cfg, {"n", "psi0", "psi0_file", "seed"}, "simulate");
    if (cfg.contains("psi0")) psi0_json = cfg["psi0"];
    if (cfg.contains("psi0_file"))
      psi0_json = nlohmann::json::parse(read_text_file(cfg["psi0_file"].get<std::string>()));
    if (n_resolved <= 0 && cfg.contains("n")) n_resolved = cfg["n"].get<int>();
  }
  if (!psi0_path.empty()) psi0_json = nlohmann::json::parse(read_text_file(psi0_path));
  if (psi0_json.is_null())
    throw std::invalid_argument("simulate: no psi0 given (use --psi0 or config psi0/psi0_file)");
  if (n_resolved <= 0) throw std::invalid_argument("simulate: need n >= 1 (use --n)");

  const SgameParams psi0 = params_from_json(psi0_json);
  require_in_class(psi0);
  log_line(LogLevel::Info, "simulate: n=" + std::to_string(n_resolved) +
                               " seed=" + std::to_string(seed) + " out=" + out);

  Rng rng = Rng::stream(seed, 0);
  const int p = psi0.x_dim();
  const int q = psi0.y_dim();
  Eigen::MatrixXd design(n_resolved, p), responses(n_resolved, q);
  const DensityCache cache(psi0);
  for (int i = 0; i < n_resolved; ++i) {
    for (int j = 0; j < p; ++j) design(i, j) = rng.uniform01();
    responses.row(i) = cache.sample(design.row(i).transpose(), rng).transpose();
  }
  const Dataset data(std::move(design), std::move(responses));
  write_text_file(out, dataset_to_csv(data));

  nlohmann::json meta;
  meta["psi0"] = params_to_json(psi0);
  meta["seed"] = seed;
  meta["n"] = n_resolved;
  write_text_file(out + ".meta.json", meta.dump(2) + "\n");
  return 0;
}

// ---- fit --------------------------------------------------------------------

int cmd_fit(const std::string& config_path, const std::string& data_path, int k, double lambda,
            int ball_m, std::uint64_t seed, const std::string& out) {
  ParameterBounds bounds = default_bounds(k);
  FitConfig fit_cfg;
  if (!config_path.empty()) {
    const nlohmann::json cfg = load_config(config_path);
    reject_unknown_keys(cfg, {"bounds", "fit"}, "fit");
    if (cfg.contains("bounds")) bounds = bounds_from_json(cfg["bounds"]);
    if (cfg.contains("fit")) fit_cfg = fit_config_from_json(cfg["fit"]);
  }
  bounds.k = k;
  fit_cfg.seed = seed;

  const Dataset data = dataset_from_csv(read_text_file(data_path));
  log_line(LogLevel::Info, "fit: data=" + data_path + " k=" + std::to_string(k) +
                               (ball_m > 0 ? " ball_m=" + std::to_string(ball_m)
                                           : " lambda=" + std::to_string(lambda)) +
                               " seed=" + std::to_string(seed));

  const FitResult fit = ball_m > 0 ? fit_ball_constrained(data, k, ball_m, bounds, fit_cfg)
                                   : fit_lasso(data, k, lambda, bounds, fit_cfg);
  if (!fit.converged) log_line(LogLevel::Info, "fit: not converged within max_em_iters");
  write_text_file(out, fit_result_to_json(fit).dump(2) + "\n");
  return 0;
}

// ---- bounds -----------------------------------------------------------------

int cmd_bounds(const std::string& config_path, int n, int p, int q, int k, double kappa,
               bool allow_small_kappa, const std::string& out) {
  ParameterBounds bounds = default_bounds(k);
  std::vector<int> m_grid{1, 2, 4, 8};
  if (!config_path.empty()) {
    const nlohmann::json cfg = load_config(config_path);
    reject_unknown_keys(cfg, {"bounds", "m_grid"}, "bounds");
    if (cfg.contains("bounds")) bounds = bounds_from_json(cfg["bounds"]);
    if (cfg.contains("m_grid")) m_grid = cfg["m_grid"].get<std::vector<int>>();
  }
  bounds.k = k;

  BoundInputs in;
  in.n = n;
  in.p = p;
  in.q = q;
  in.bounds = bounds;
  in.kappa = kappa;
  in.validate(allow_small_kappa);

  const double m_n = truncation_level_mn(n, bounds);
  const double b_n = envelope_bn(m_n, bounds, q);
  const double b_n_prime = envelope_bn_prime(n, bounds, q);
  const double lambda_min = lambda_lower_bound(in, allow_small_kappa);

  nlohmann::json j;
  j["inputs"] = {{"n", n}, {"p", p}, {"q", q}, {"k", k}, {"kappa", kappa}};
  j["inputs"]["bounds"] = bounds_to_json(bounds);
  j["non_theorem"] = kappa < 148.0;
  j["m_n"] = m_n;
  j["b_n"] = b_n;
  j["b_n_prime"] = b_n_prime;
  j["lambda_min"] = lambda_min;
  j["r_n"] = sup_log_ratio_rn(bounds, q, b_n);
  nlohmann::json dm = nlohmann::json::array();
  for (int m : m_grid) dm.push_back({{"m", m}, {"delta_m", delta_m(m, p, n, bounds, q)}});
  j["delta_m_grid"] = std::move(dm);
  j["tail_bound"] = response_tail_bound(m_n, n, bounds, q);
  const EntropyConstants ec = entropy_constants(bounds, q);
  j["entropy_constants"] = {{"c_s0", ec.c_s0}, {"h_s0", ec.h_s0}};
  const OracleRhs rhs = oracle_risk_rhs(0.0, 0.0, in, lambda_min, allow_small_kappa);
  j["oracle_rhs_remainder"] = {{"lambda_term", rhs.lambda_term},
                               {"tail_term", rhs.tail_term},
                               {"deviation_term", rhs.deviation_term},
                               {"total_at_zero_surrogate", rhs.total}};

  const std::string text = j.dump(2) + "\n";
  std::cout << text;
  if (!out.empty()) write_text_file(out, text);
  return 0;
}

// ---- verify -----------------------------------------------------------------

Eigen::MatrixXd uniform_design(int n, int p, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, 0x9D);
  Eigen::MatrixXd x(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) x(i, j) = rng.uniform01();
  return x;
}

std::vector<SuiteReport> run_suites(const std::string& suite, int trials, std::uint64_t seed,
                                    int threads) {
  const SgameParams truth = make_default_truth();
  std::vector<SuiteReport> reports;
  const bool all = suite == "all";

  if (all || suite == "gradient") {
    ParameterBounds b = truth.bounds;
    reports.push_back(verify_gradient_envelope(b, 1, 5, std::max(trials, 1000), seed));
    ParameterBounds b2 = b;
    b2.k = 3;
    reports.push_back(verify_gradient_envelope(b2, 2, 8, std::max(trials, 1000), seed + 1));
  }
  if (all || suite == "tail") {
    const int n = 10;
    const Eigen::MatrixXd design = uniform_design(n, truth.x_dim(), seed);
    const double m_n = truncation_level_mn(n, truth.bounds);
    reports.push_back(verify_tail_bound(truth, design, m_n, std::max(trials, 100000), seed));
  }
  if (all || suite == "entropy") {
    const Eigen::MatrixXd design = uniform_design(5, truth.x_dim(), seed);
    reports.push_back(verify_entropy_bound(truth, design, std::max(trials, 20000), seed));
  }
  if (all || suite == "product") {
    reports.push_back(verify_product_constant(std::max(trials, 50), seed));
  }
  if (all || suite == "weyl") {
    reports.push_back(verify_weyl(std::max(trials, 1000), 4, seed));
  }
  if (all || suite == "em") {
    std::vector<Dataset> datasets;
    const DensityCache cache(truth);
    for (int d = 0; d < 2; ++d) {
      Rng rng = Rng::stream(seed, 0xE3 + d);
      const int n = 80;
      Eigen::MatrixXd design = uniform_design(n, truth.x_dim(), seed + d);
      Eigen::MatrixXd responses(n, truth.y_dim());
      for (int i = 0; i < n; ++i)
        responses.row(i) = cache.sample(design.row(i).transpose(), rng).transpose();
      datasets.emplace_back(std::move(design), std::move(responses));
    }
    FitConfig cfg;
    cfg.restarts = 2;
    cfg.max_em_iters = 100;
    cfg.seed = seed;
    reports.push_back(
        verify_em_monotonicity(datasets, {0.0, 0.05, 0.5}, truth.bounds, cfg));
  }
  if (all || suite == "oracle") {
    ExperimentConfig cfg = make_default_experiment_config(seed);
    cfg.n_grid = {50, 100};
    cfg.replications = 10;
    cfg.kl_method = KlMethod::monte_carlo(2000, 0);
    cfg.threads = threads;
    const OracleReport rep = run_oracle_experiment(cfg);
    SuiteReport s;
    s.suite = "oracle";
    s.trials = static_cast<int>(rep.rows.size());
    for (const auto& row : rep.rows) {
      if (!row.holds) ++s.violations;
      s.worst_case = std::max(s.worst_case, (row.lhs_mean + 2 * row.lhs_se) / row.rhs);
    }
    s.witness = "max (lhs+2se)/rhs ratio";
    s.passed = s.violations == 0;
    reports.push_back(s);
  }
  if (reports.empty()) throw std::invalid_argument("verify: unknown suite '" + suite + "'");
  return reports;
}

int cmd_verify(const std::string& suite, int trials, std::uint64_t seed, int threads,
               const std::string& out) {
  log_line(LogLevel::Info, "verify: suite=" + suite + " seed=" + std::to_string(seed));
  const std::vector<SuiteReport> reports = run_suites(suite, trials, seed, threads);
  bool all_passed = true;
  std::string blob;
  for (const auto& r : reports) {
    all_passed = all_passed && r.passed;
    std::printf("%-20s trials=%-7d violations=%-5d worst=%.6g  %s\n", r.suite.c_str(), r.trials,
                r.violations, r.worst_case, r.passed ? "PASS" : "FAIL");
    blob += r.to_json() + "\n";
  }
  if (!out.empty()) write_text_file(out, blob);
  return all_passed ? 0 : 1;
}

// ---- experiment -------------------------------------------------------------

int cmd_experiment(const std::string& config_path, std::uint64_t seed, int threads,
                   const std::string& out) {
  ExperimentConfig cfg = make_default_experiment_config(seed);
  cfg.threads = threads;
  if (!config_path.empty()) {
    const nlohmann::json j = load_config(config_path);
    reject_unknown_keys(
        j, {"truth", "n_grid", "replications", "kappa", "lambda_grid", "kl_samples", "fit"},
        "experiment");
    if (j.contains("truth")) cfg.truth = params_from_json(j["truth"]);
    if (j.contains("n_grid")) cfg.n_grid = j["n_grid"].get<std::vector<int>>();
    if (j.contains("replications")) cfg.replications = j["replications"].get<int>();
    if (j.contains("kappa")) cfg.lambda_policy = TheoremMinimum{j["kappa"].get<double>()};
    if (j.contains("lambda_grid"))
      cfg.lambda_policy = LambdaGrid{j["lambda_grid"].get<std::vector<double>>()};
    if (j.contains("kl_samples"))
      cfg.kl_method = KlMethod::monte_carlo(j["kl_samples"].get<int>(), 0);
    if (j.contains("fit")) cfg.fit_cfg = fit_config_from_json(j["fit"]);
  }
  cfg.seed = seed;
  log_line(LogLevel::Info, "experiment: seed=" + std::to_string(seed) + " out=" + out);

  const OracleReport report = run_oracle_experiment(cfg);
  const std::string csv = report.to_csv();
  if (out.empty())
    std::cout << csv;
  else
    write_text_file(out, csv);
  log_line(LogLevel::Info,
           std::string("experiment: bound ") + (report.all_hold() ? "holds" : "VIOLATED") +
               " at every grid point; failed replications: " +
               std::to_string(report.failed_replications));
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Soft-max-gated mixture-of-Gaussian-experts: Lasso estimation and bound verification"};
  app.require_subcommand(1);

  std::string config_path, out, psi0_path, data_path, suite;
  std::uint64_t seed = 0;
  int n = 0, p = 1, q = 1, k = 2, ball_m = 0, trials = 0, threads = 1;
  double lambda = 0.0, kappa = 148.0;
  bool allow_small_kappa = false;

  auto* sim = app.add_subcommand("simulate", "Draw a dataset from a given truth");
  sim->add_option("--config", config_path, "JSON config (n, psi0 or psi0_file, seed)");
  sim->add_option("--psi0", psi0_path, "JSON file with the generating parameters");
  sim->add_option("--n", n, "Number of observations");
  sim->add_option("--seed", seed, "RNG seed");
  sim->add_option("--out", out, "Output CSV path")->required();

  auto* fit = app.add_subcommand("fit", "Fit the penalized estimator to a CSV dataset");
  fit->add_option("--config", config_path, "JSON config (bounds, fit)");
  fit->add_option("--data", data_path, "Input CSV dataset")->required();
  fit->add_option("--k", k, "Number of experts")->required();
  fit->add_option("--lambda", lambda, "l1 penalty strength");
  fit->add_option("--ball-m", ball_m, "Fit under an l1 ball of this radius instead");
  fit->add_option("--seed", seed, "RNG seed");
  fit->add_option("--out", out, "Output JSON path")->required();

  auto* bnd = app.add_subcommand("bounds", "Evaluate every closed-form constant");
  bnd->add_option("--config", config_path, "JSON config (bounds, m_grid)");
  bnd->add_option("--n", n, "Sample size")->required();
  bnd->add_option("--p", p, "Covariate dimension")->required();
  bnd->add_option("--q", q, "Response dimension")->required();
  bnd->add_option("--k", k, "Number of experts")->required();
  bnd->add_option("--kappa", kappa, "Oracle constant (>= 148)");
  bnd->add_flag("--allow-small-kappa", allow_small_kappa,
                "Accept kappa < 148 (labeled non-theorem)");
  bnd->add_option("--out", out, "Also write the JSON report here");

  auto* ver = app.add_subcommand("verify", "Run numerical verification suites");
  ver->add_option("suite", suite, "gradient|tail|entropy|product|weyl|em|oracle|all")->required();
  ver->add_option("--trials", trials, "Trial count override");
  ver->add_option("--seed", seed, "RNG seed");
  ver->add_option("--threads", threads, "Worker cap");
  ver->add_option("--out", out, "Write JSON reports here");

  auto* exp = app.add_subcommand("experiment", "Run the oracle-inequality experiment");
  exp->add_option("--config", config_path, "JSON config");
  exp->add_option("--seed", seed, "RNG seed");
  exp->add_option("--threads", threads, "Worker cap");
  exp->add_option("--out", out, "Output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (sim->parsed()) return cmd_simulate(config_path, psi0_path, n, seed, out);
    if (fit->parsed()) {
      if (ball_m > 0 && fit->count("--lambda") > 0)
        throw std::invalid_argument("fit: give either --lambda or --ball-m, not both");
      return cmd_fit(config_path, data_path, k, lambda, ball_m, seed, out);
    }
    if (bnd->parsed())
      return cmd_bounds(config_path, n, p, q, k, kappa, allow_small_kappa, out);
    if (ver->parsed()) return cmd_verify(suite, trials, seed, threads, out);
    if (exp->parsed()) return cmd_experiment(config_path, seed, threads, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace sgame
