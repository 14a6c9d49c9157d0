#include <benchmark/benchmark.h>

#include <cmath>

#include "selmut/hj_solver.hpp"
#include "selmut/integral_solver.hpp"
#include "selmut/model.hpp"
#include "selmut/numerics.hpp"
#include "selmut/parabolic_solver.hpp"

using namespace selmut;

namespace {

Grid1D bench_grid(benchmark::State& state) { return Grid1D(-4.0, 4.0, static_cast<std::size_t>(state.range(0))); }

Field tent(const Grid1D& g, double eps) {
  return Field::sample(g, [eps](double x) { return -std::abs(x - 1.0) + eps; });
}

void BM_WeightedExpIntegral(benchmark::State& state) {
  const Grid1D g = bench_grid(state);
  const Field u = tent(g, 0.0);
  const Field w(g, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(weighted_exp_integral(u, w, 0.01).value);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}
BENCHMARK(BM_WeightedExpIntegral)->Arg(801)->Arg(3201);

void BM_ParabolicStep(benchmark::State& state) {
  const Grid1D g = bench_grid(state);
  const ModelSpec m = make_catalog_model("M1");
  SolverConfig cfg;
  cfg.eps = 0.05;
  const ParabolicSolver solver(m, g, cfg);
  const SimState s0 = solver.initial_state(build_initial_data(m, g, cfg.eps, 1.5, 1.0).u);
  for (auto _ : state) benchmark::DoNotOptimize(solver.step(s0).t);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}
BENCHMARK(BM_ParabolicStep)->Arg(801)->Arg(3201);

void BM_IntegralRhs(benchmark::State& state) {
  const Grid1D g = bench_grid(state);
  const ModelSpec m = make_catalog_model("M2x");
  SolverConfig cfg;
  cfg.eps = 0.05;
  const IntegralSolver solver(m, g, cfg, build_kernel_quadrature(m));
  const Field u = build_initial_data(m, g, cfg.eps, 1.5, 1.0).u;
  std::vector<double> out(g.size());
  ClampCounter counter;
  for (auto _ : state) benchmark::DoNotOptimize(solver.rhs(u, 1.5, out, counter));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}
BENCHMARK(BM_IntegralRhs)->Arg(801)->Arg(1601);

void BM_IntegralStep(benchmark::State& state) {
  const Grid1D g = bench_grid(state);
  const ModelSpec m = make_catalog_model("M2");
  SolverConfig cfg;
  cfg.eps = 0.05;
  const IntegralSolver solver(m, g, cfg, build_kernel_quadrature(m));
  const SimState s0 = solver.initial_state(build_initial_data(m, g, cfg.eps, 1.5, 1.0).u);
  for (auto _ : state) benchmark::DoNotOptimize(solver.step(s0).t);
}
BENCHMARK(BM_IntegralStep)->Arg(801);

void BM_ConstrainedStep(benchmark::State& state) {
  const Grid1D g = bench_grid(state);
  const bool kernel = state.range(1) != 0;
  const ModelSpec m = make_catalog_model(kernel ? "M2" : "M1");
  const NutrientRange range{kernel ? 1.0 : 1.0588235294117647, 2.0};
  const Hamiltonian ham = kernel ? Hamiltonian::kernel_integral(m, range, build_kernel_quadrature(m))
                                 : Hamiltonian::eikonal(m, range);
  const HJState s{0.0, tent(g, 0.0), 0.0};
  const double dt = default_hj_dt(g);
  for (auto _ : state) benchmark::DoNotOptimize(constrained_step(s, ham, dt, 1e-10).I);
}
BENCHMARK(BM_ConstrainedStep)->Args({801, 0})->Args({801, 1});

}  // namespace

BENCHMARK_MAIN();
