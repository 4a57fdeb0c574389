#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "sgame/divergence.hpp"
#include "sgame/estimator.hpp"
#include "sgame/model.hpp"
#include "sgame/rng.hpp"
#include "sgame/verify.hpp"

using namespace sgame;

namespace {

SgameParams bench_params() { return make_default_truth(); }

Dataset bench_data(int n, std::uint64_t seed) {
  const SgameParams psi = bench_params();
  const DensityCache cache(psi);
  Rng rng(seed);
  Eigen::MatrixXd x(n, psi.x_dim()), y(n, 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < psi.x_dim(); ++j) x(i, j) = rng.uniform01();
    y.row(i) = cache.sample(x.row(i).transpose(), rng).transpose();
  }
  return Dataset(std::move(x), std::move(y));
}

void BM_SoftmaxGates(benchmark::State& state) {
  const SgameParams psi = bench_params();
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(psi.x_dim(), 0.4);
  for (auto _ : state) benchmark::DoNotOptimize(softmax_gates(psi.gating, x));
}
BENCHMARK(BM_SoftmaxGates);

void BM_LogDensity(benchmark::State& state) {
  const SgameParams psi = bench_params();
  const DensityCache cache(psi);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(psi.x_dim(), 0.4);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 1.2);
  for (auto _ : state) benchmark::DoNotOptimize(cache.log_density(x, y));
}
BENCHMARK(BM_LogDensity);

void BM_LogDensityGradient(benchmark::State& state) {
  const SgameParams psi = bench_params();
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(psi.x_dim(), 0.4);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 1.2);
  for (auto _ : state) benchmark::DoNotOptimize(log_density_gradient(psi, x, y));
}
BENCHMARK(BM_LogDensityGradient);

void BM_Sample(benchmark::State& state) {
  const SgameParams psi = bench_params();
  const DensityCache cache(psi);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(psi.x_dim(), 0.4);
  Rng rng(9);
  for (auto _ : state) benchmark::DoNotOptimize(cache.sample(x, rng));
}
BENCHMARK(BM_Sample);

void BM_EStep(benchmark::State& state) {
  const SgameParams psi = bench_params();
  const Dataset data = bench_data(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(e_step(psi, data));
}
BENCHMARK(BM_EStep)->Arg(100)->Arg(1000);

void BM_KlQuadrature(benchmark::State& state) {
  const SgameParams truth = bench_params();
  SgameParams cand = truth;
  cand.experts.intercepts(0, 0) += 0.3;
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(truth.x_dim(), 0.4);
  const KlMethod method = KlMethod::quadrature(640);
  for (auto _ : state) benchmark::DoNotOptimize(kl_conditional(truth, cand, x, method));
}
BENCHMARK(BM_KlQuadrature);

void BM_ProjectL1Ball(benchmark::State& state) {
  Rng rng(17);
  Eigen::VectorXd v(200);
  for (int i = 0; i < v.size(); ++i) v[i] = rng.uniform(-2, 2);
  for (auto _ : state) benchmark::DoNotOptimize(project_l1_ball(v, 5.0));
}
BENCHMARK(BM_ProjectL1Ball);

void BM_FitLasso(benchmark::State& state) {
  const SgameParams psi = bench_params();
  const Dataset data = bench_data(200, 3);
  FitConfig cfg;
  cfg.restarts = 1;
  cfg.max_em_iters = 25;
  for (auto _ : state)
    benchmark::DoNotOptimize(fit_lasso(data, 2, 0.05, psi.bounds, cfg));
}
BENCHMARK(BM_FitLasso)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
