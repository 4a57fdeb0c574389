#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

#include "sgame/bounds.hpp"
#include "sgame/cli.hpp"
#include "sgame/estimator.hpp"
#include "sgame/io.hpp"
#include "sgame/verify.hpp"
#include "test_helpers.hpp"

using namespace sgame;

namespace {

int cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("sgame");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("sgame_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

}  // namespace

TEST_CASE("dataset csv: header contract and a lossless round trip") {
  Rng rng(5);
  Eigen::MatrixXd x(10, 2), y(10, 1);
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = rng.uniform01();
    x(i, 1) = rng.uniform01();
    y(i, 0) = rng.normal() * 1e-3 + 1.0 / 3.0;
  }
  const Dataset data(x, y);
  const std::string csv = dataset_to_csv(data);
  CHECK(csv.substr(0, csv.find('\n')) == "x1,x2,y1");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);

  const Dataset back = dataset_from_csv(csv);
  CHECK(back.design == data.design);
  CHECK(back.responses == data.responses);
}

TEST_CASE("dataset csv: malformed inputs are rejected") {
  CHECK_THROWS_AS(dataset_from_csv(""), std::invalid_argument);
  CHECK_THROWS_AS(dataset_from_csv("a,b\n1,2\n"), std::invalid_argument);
  CHECK_THROWS_AS(dataset_from_csv("x1,y1\n0.5\n"), std::invalid_argument);
  CHECK_THROWS_AS(dataset_from_csv("x1,y1\n0.5,zag\n"), std::invalid_argument);
  CHECK_THROWS_AS(dataset_from_csv("x1,y1\n"), std::invalid_argument);
  CHECK_THROWS_AS(dataset_from_csv("x1,y1\n2.5,0.0\n"), std::invalid_argument);  // design > 1
}

TEST_CASE("params json: bitwise round trip") {
  ParameterBounds b;
  b.a_gamma = 1.5;
  b.a_beta = 2.0;
  b.a_sigma_min = 0.5;
  b.a_sigma_max = 3.0;
  b.k = 2;
  Rng rng(7);
  const SgameParams psi = sgame::test::random_in_class(b, 3, 2, rng);
  const SgameParams back = params_from_json(params_to_json(psi));
  CHECK(back.gating.intercepts == psi.gating.intercepts);
  CHECK(back.gating.slopes == psi.gating.slopes);
  CHECK(back.experts.intercepts == psi.experts.intercepts);
  for (int k = 0; k < 2; ++k) {
    CHECK(back.experts.slopes[k] == psi.experts.slopes[k]);
    CHECK(back.experts.covariances[k] == psi.experts.covariances[k]);
  }
  CHECK(back.bounds.a_gamma == psi.bounds.a_gamma);

  // and the dump itself is stable
  CHECK(params_to_json(back).dump() == params_to_json(psi).dump());
}

TEST_CASE("params json: unknown keys rejected") {
  nlohmann::json j = params_to_json(make_default_truth());
  j["extra"] = 1;
  CHECK_THROWS_AS(params_from_json(j), std::invalid_argument);
  nlohmann::json j2 = params_to_json(make_default_truth());
  j2["bounds"]["bogus"] = 2.0;
  CHECK_THROWS_AS(params_from_json(j2), std::invalid_argument);
}

TEST_CASE("fit result json: full round trip") {
  Rng rng(11);
  Eigen::MatrixXd x(50, 2), y(50, 1);
  for (int i = 0; i < 50; ++i) {
    x(i, 0) = rng.uniform01();
    x(i, 1) = rng.uniform01();
    y(i, 0) = 1.0 - x(i, 0) + 0.3 * rng.normal();
  }
  const Dataset data(x, y);
  ParameterBounds b;
  b.a_gamma = 4.0;
  b.a_beta = 8.0;
  b.a_sigma_min = 0.1;
  b.a_sigma_max = 20.0;
  b.k = 1;
  FitConfig cfg;
  cfg.restarts = 1;
  cfg.max_em_iters = 30;
  const FitResult fit = fit_lasso(data, 1, 0.05, b, cfg);
  const FitResult back = fit_result_from_json(fit_result_to_json(fit));
  CHECK(fit_result_to_json(back).dump() == fit_result_to_json(fit).dump());
  CHECK(back.final_penalized_nll == fit.final_penalized_nll);
  CHECK(back.iterations == fit.iterations);
}

TEST_CASE("cli: simulate -> fit -> verify round trip on emitted files only") {
  TempDir dir;
  const std::string psi_path = dir.file("truth.json");
  write_text_file(psi_path, params_to_json(make_default_truth()).dump(2));

  const std::string data_path = dir.file("data.csv");
  CHECK(cli({"simulate", "--psi0", psi_path, "--n", "80", "--seed", "3", "--out", data_path}) ==
        0);
  CHECK(std::filesystem::exists(data_path));
  CHECK(std::filesystem::exists(data_path + ".meta.json"));

  const Dataset data = dataset_from_csv(read_text_file(data_path));
  CHECK(data.size() == 80);
  CHECK(data.x_dim() == 10);

  const std::string fit_path = dir.file("fit.json");
  CHECK(cli({"fit", "--data", data_path, "--k", "2", "--lambda", "0.05", "--seed", "5", "--out",
             fit_path}) == 0);
  const FitResult fit = fit_result_from_json(nlohmann::json::parse(read_text_file(fit_path)));
  CHECK(fit.params.num_experts() == 2);
  CHECK(fit.penalized_nll_trace.size() >= 1);
}

TEST_CASE("cli: identical seeds give byte-identical artifacts") {
  TempDir dir;
  const std::string psi_path = dir.file("truth.json");
  write_text_file(psi_path, params_to_json(make_default_truth()).dump(2));

  const std::string a = dir.file("a.csv"), b = dir.file("b.csv");
  CHECK(cli({"simulate", "--psi0", psi_path, "--n", "40", "--seed", "9", "--out", a}) == 0);
  CHECK(cli({"simulate", "--psi0", psi_path, "--n", "40", "--seed", "9", "--out", b}) == 0);
  CHECK(read_text_file(a) == read_text_file(b));
  CHECK(read_text_file(a + ".meta.json") == read_text_file(b + ".meta.json"));

  const std::string fa = dir.file("fa.json"), fb = dir.file("fb.json");
  CHECK(cli({"fit", "--data", a, "--k", "2", "--lambda", "0.1", "--seed", "4", "--out", fa}) == 0);
  CHECK(cli({"fit", "--data", b, "--k", "2", "--lambda", "0.1", "--seed", "4", "--out", fb}) == 0);
  CHECK(read_text_file(fa) == read_text_file(fb));
}

TEST_CASE("cli: simulate rejects an out-of-class truth with a named constraint") {
  TempDir dir;
  SgameParams bad = make_default_truth();
  bad.gating.slopes(0, 0) = 100.0;  // breaks the gating box
  const std::string psi_path = dir.file("bad.json");
  write_text_file(psi_path, params_to_json(bad).dump(2));
  CHECK(cli({"simulate", "--psi0", psi_path, "--n", "10", "--seed", "1", "--out",
             dir.file("x.csv")}) != 0);
}

TEST_CASE("cli: bounds command guards kappa and honors the escape hatch") {
  TempDir dir;
  const std::string out = dir.file("bounds.json");
  CHECK(cli({"bounds", "--n", "100", "--p", "10", "--q", "1", "--k", "2", "--kappa", "148",
             "--out", out}) == 0);
  const nlohmann::json j = nlohmann::json::parse(read_text_file(out));
  CHECK(j["non_theorem"] == false);
  CHECK(j["lambda_min"].get<double>() > 0.0);
  CHECK(j.contains("m_n"));
  CHECK(j.contains("b_n_prime"));
  CHECK(j.contains("delta_m_grid"));

  CHECK(cli({"bounds", "--n", "100", "--p", "10", "--q", "1", "--k", "2", "--kappa", "100"}) !=
        0);
  CHECK(cli({"bounds", "--n", "100", "--p", "10", "--q", "1", "--k", "2", "--kappa", "100",
             "--allow-small-kappa", "--out", out}) == 0);
  CHECK(nlohmann::json::parse(read_text_file(out))["non_theorem"] == true);
}

TEST_CASE("cli: bounds JSON re-parses to the exact same doubles") {
  TempDir dir;
  const std::string out = dir.file("bounds.json");
  REQUIRE(cli({"bounds", "--n", "250", "--p", "7", "--q", "2", "--k", "3", "--out", out}) == 0);
  const nlohmann::json j = nlohmann::json::parse(read_text_file(out));
  // recompute through the bounds module and compare bitwise
  ParameterBounds b = bounds_from_json(j["inputs"]["bounds"]);
  BoundInputs in;
  in.n = 250;
  in.p = 7;
  in.q = 2;
  in.bounds = b;
  in.kappa = 148.0;
  CHECK(j["m_n"].get<double>() == truncation_level_mn(250, b));
  CHECK(j["b_n_prime"].get<double>() == envelope_bn_prime(250, b, 2));
  CHECK(j["lambda_min"].get<double>() == lambda_lower_bound(in));
}

TEST_CASE("cli: verify dispatch, unknown suite, missing file") {
  CHECK(cli({"verify", "weyl", "--trials", "200", "--seed", "5"}) == 0);
  CHECK(cli({"verify", "bogus"}) != 0);
  CHECK(cli({"fit", "--data", "/nonexistent/file.csv", "--k", "2", "--lambda", "0", "--out",
             "/tmp/never.json"}) != 0);
}

TEST_CASE("cli: K=1 lambda=0 fit matches OLS computed from the same CSV") {
  TempDir dir;
  SgameParams truth = sgame::test::single_expert(0.5, 0.09, 2);
  truth.experts.slopes[0](0, 0) = -1.0;
  const std::string psi_path = dir.file("truth1.json");
  write_text_file(psi_path, params_to_json(truth).dump(2));
  const std::string data_path = dir.file("d1.csv");
  REQUIRE(cli({"simulate", "--psi0", psi_path, "--n", "400", "--seed", "6", "--out",
               data_path}) == 0);

  const std::string cfg_path = dir.file("cfg1.json");
  write_text_file(cfg_path,
                  R"({"bounds": {"a_gamma": 5.0, "a_beta": 10.0, "a_sigma_min": 0.05,)"
                  R"( "a_sigma_max": 50.0, "k": 1},)"
                  R"( "fit": {"restarts": 1, "inner_iters": 400, "em_tol": 1e-13}})");
  const std::string fit_path = dir.file("f1.json");
  REQUIRE(cli({"fit", "--config", cfg_path, "--data", data_path, "--k", "1", "--lambda", "0",
               "--out", fit_path}) == 0);

  const Dataset data = dataset_from_csv(read_text_file(data_path));
  Eigen::MatrixXd xt(data.size(), 3);
  xt.col(0).setOnes();
  xt.rightCols(2) = data.design;
  const Eigen::VectorXd beta =
      (xt.transpose() * xt).ldlt().solve(xt.transpose() * data.responses.col(0));

  const FitResult fit = fit_result_from_json(nlohmann::json::parse(read_text_file(fit_path)));
  CHECK(std::abs(fit.params.experts.intercepts(0, 0) - beta[0]) <= 1e-6);
  CHECK(std::abs(fit.params.experts.slopes[0](0, 0) - beta[1]) <= 1e-6);
  CHECK(std::abs(fit.params.experts.slopes[0](0, 1) - beta[2]) <= 1e-6);
}

TEST_CASE("cli: an enormous lambda empties the output masks") {
  TempDir dir;
  const std::string psi_path = dir.file("truth.json");
  write_text_file(psi_path, params_to_json(make_default_truth()).dump(2));
  const std::string data_path = dir.file("d.csv");
  REQUIRE(cli({"simulate", "--psi0", psi_path, "--n", "100", "--seed", "8", "--out",
               data_path}) == 0);
  const std::string fit_path = dir.file("f.json");
  REQUIRE(cli({"fit", "--data", data_path, "--k", "2", "--lambda", "1e9", "--out", fit_path}) ==
          0);
  const FitResult fit = fit_result_from_json(nlohmann::json::parse(read_text_file(fit_path)));
  CHECK(fit.active_gating.cast<int>().sum() == 0);
  for (const auto& m : fit.active_experts) CHECK(m.cast<int>().sum() == 0);
}

TEST_CASE("cli: ball-constrained fit honors the radius") {
  TempDir dir;
  const std::string psi_path = dir.file("truth.json");
  write_text_file(psi_path, params_to_json(make_default_truth()).dump(2));
  const std::string data_path = dir.file("d.csv");
  REQUIRE(cli({"simulate", "--psi0", psi_path, "--n", "150", "--seed", "12", "--out",
               data_path}) == 0);
  const std::string fit_path = dir.file("f.json");
  REQUIRE(cli({"fit", "--data", data_path, "--k", "2", "--ball-m", "2", "--out", fit_path}) ==
          0);
  const FitResult fit = fit_result_from_json(nlohmann::json::parse(read_text_file(fit_path)));
  CHECK(penalized_l1_norm(fit.params) <= 2.0 + 1e-10);
}

TEST_CASE("cli: fit config file with unknown keys is rejected") {
  TempDir dir;
  const std::string psi_path = dir.file("truth.json");
  write_text_file(psi_path, params_to_json(make_default_truth()).dump(2));
  const std::string data_path = dir.file("d.csv");
  REQUIRE(cli({"simulate", "--psi0", psi_path, "--n", "30", "--seed", "2", "--out", data_path}) ==
          0);

  const std::string cfg_path = dir.file("cfg.json");
  write_text_file(cfg_path, R"({"fit": {"restarts": 2}, "typo_key": 1})");
  CHECK(cli({"fit", "--config", cfg_path, "--data", data_path, "--k", "2", "--lambda", "0.1",
             "--out", dir.file("f.json")}) != 0);

  write_text_file(cfg_path, R"({"fit": {"restarts": 2, "em_tol": 1e-6}})");
  CHECK(cli({"fit", "--config", cfg_path, "--data", data_path, "--k", "2", "--lambda", "0.1",
             "--out", dir.file("f.json")}) == 0);
}
