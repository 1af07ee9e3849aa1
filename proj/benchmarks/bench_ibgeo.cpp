#include <benchmark/benchmark.h>

#include "ibgeo/encoder_lab.hpp"
#include "ibgeo/ib_exact.hpp"
#include "ibgeo/maxent_chain.hpp"
#include "ibgeo/rng.hpp"
#include "ibgeo/sigreg.hpp"
#include "ibgeo/tasks.hpp"

namespace {

using namespace ibgeo;

void bm_solve_binary(benchmark::State& state) {
  const JointPMF j = binary_task();
  const double beta = static_cast<double>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(solve_at_beta(j, beta));
}
BENCHMARK(bm_solve_binary)->Arg(5)->Arg(50)->Arg(250);

void bm_trace_curve_clusters(benchmark::State& state) {
  const JointPMF j = discrete_clusters_task();
  const std::vector<double> grid{0.5, 5, 10, 25, 50, 100, 250};
  for (auto _ : state)
    benchmark::DoNotOptimize(trace_curve(j, grid));
}
BENCHMARK(bm_trace_curve_clusters)->Unit(benchmark::kMillisecond);

void bm_epps_pulley(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const CounterRng rng(3);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x(i) = rng.normal(i);
  for (auto _ : state)
    benchmark::DoNotOptimize(epps_pulley(x));
}
BENCHMARK(bm_epps_pulley)->Arg(256)->Arg(1024)->Arg(4096);

void bm_sigreg_loss(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  SketchConfig cfg;
  cfg.m = 64;
  cfg.dim = 20;
  const CounterRng rng(4);
  Eigen::MatrixXd b(n, cfg.dim);
  std::uint64_t c = 0;
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < cfg.dim; ++d) b(i, d) = rng.normal(c++);
  for (auto _ : state)
    benchmark::DoNotOptimize(sigreg_loss(b, cfg));
}
BENCHMARK(bm_sigreg_loss)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

void bm_sample_chain(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_chain(k, 10000, 11));
}
BENCHMARK(bm_sample_chain)->Arg(2)->Arg(10)->Unit(benchmark::kMillisecond);

void bm_ceb_loss(benchmark::State& state) {
  const DiscretePanel panel = panel_from_joint(discrete_clusters_task());
  Eigen::MatrixXd alphas = 30.0 * panel.cond.array() + 0.1;
  const DirichletEncoder enc = DirichletEncoder::from_alphas(alphas);
  const int n = static_cast<int>(state.range(0));
  const CounterRng rng(5);
  Minibatch b;
  b.xs.resize(n, panel.features.cols());
  Eigen::VectorXi ys(n);
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform(2 * static_cast<std::uint64_t>(i));
    int d = 0;
    for (; d < panel.px.size() - 1; ++d) {
      u -= panel.px(d);
      if (u <= 0) break;
    }
    b.xs.row(i) = panel.features.row(d);
    double uy = rng.uniform(2 * static_cast<std::uint64_t>(i) + 1);
    int y = 0;
    for (; y < panel.cond.cols() - 1; ++y) {
      uy -= panel.cond(d, y);
      if (uy <= 0) break;
    }
    ys(i) = y;
  }
  b.ys = ys;
  EstimatorConfig cfg;
  cfg.s = 2;
  for (auto _ : state)
    benchmark::DoNotOptimize(ceb_loss(enc, b, 250.0, cfg));
}
BENCHMARK(bm_ceb_loss)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
