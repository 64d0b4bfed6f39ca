#include <benchmark/benchmark.h>

#include "entmap/assignment.hpp"
#include "entmap/maps.hpp"
#include "entmap/nearest_neighbor.hpp"
#include "entmap/semidual.hpp"
#include "entmap/sinkhorn.hpp"

namespace {

using namespace entmap;

DiscreteMeasure two_atom_target(Index d) {
  Matrix y = Matrix::Constant(2, d, 0.5);
  y(0, 0) = 0.25;
  y(1, 0) = 0.75;
  return DiscreteMeasure(PointCloud(y), Vector::Constant(2, 0.5));
}

// Sinkhorn from an n-point empirical source onto two atoms at eps = n^{-1/2}.
void BM_SinkhornSemiDiscrete(benchmark::State& state) {
  const Index n = state.range(0);
  RandomSource rng(1);
  const DiscreteMeasure mu = empirical(sample_uniform_box(0.0, 1.0, n, 10, rng));
  const DiscreteMeasure nu = two_atom_target(10);
  SinkhornOptions opt;
  opt.epsilon = 1.0 / std::sqrt(static_cast<double>(n));
  int iterations = 0;
  for (auto _ : state) {
    const auto r = sinkhorn::solve(mu, nu, opt);
    iterations = r.report.iterations;
    benchmark::DoNotOptimize(r.potentials.g.data());
  }
  state.counters["sinkhorn_iters"] = iterations;
  state.SetComplexityN(n);
}
BENCHMARK(BM_SinkhornSemiDiscrete)->RangeMultiplier(4)->Range(256, 4096)->Unit(benchmark::kMillisecond);

void BM_SinkhornDense(benchmark::State& state) {
  const Index n = state.range(0);
  RandomSource rng(2);
  const DiscreteMeasure mu = empirical(sample_uniform_box(0.0, 1.0, n, 3, rng));
  const DiscreteMeasure nu = empirical(sample_uniform_box(0.0, 1.0, n, 3, rng));
  SinkhornOptions opt;
  opt.epsilon = 0.05;
  for (auto _ : state) benchmark::DoNotOptimize(sinkhorn::solve(mu, nu, opt).potentials.f.data());
}
BENCHMARK(BM_SinkhornDense)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Assignment(benchmark::State& state) {
  const Index n = state.range(0);
  RandomSource rng(3);
  const PointCloud x = sample_uniform_box(0.0, 1.0, n, 10, rng);
  const PointCloud y = sample_uniform_box(0.0, 1.0, n, 10, rng);
  for (auto _ : state) benchmark::DoNotOptimize(solve_assignment(x, y).objective);
  state.SetComplexityN(n);
}
BENCHMARK(BM_Assignment)->RangeMultiplier(2)->Range(128, 1024)->Unit(benchmark::kMillisecond);

void BM_EntropicEval(benchmark::State& state) {
  const Index J = state.range(0);
  const Index d = 10;
  RandomSource rng(4);
  Vector q = Vector::Constant(J, 1.0 / static_cast<double>(J));
  Vector psi(J);
  for (Index j = 0; j < J; ++j) psi(j) = rng.uniform(0.0, 0.1);
  const EntropicMapModel model(sample_uniform_box(0.0, 1.0, J, d, rng), q, psi, 0.02);
  const Matrix xs = sample_uniform_box(0.0, 1.0, 10000, d, rng).points();
  for (auto _ : state) benchmark::DoNotOptimize(entropic_eval_batch(model, xs).data());
  state.SetItemsProcessed(state.iterations() * xs.rows());
}
BENCHMARK(BM_EntropicEval)->Arg(2)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_NearestNeighbor(benchmark::State& state) {
  const Index d = state.range(0);
  const auto mode = state.range(1) != 0 ? NeighborSearch::kKdTree : NeighborSearch::kBruteForce;
  RandomSource rng(5);
  const NearestNeighborIndex index(sample_uniform_box(0.0, 1.0, 4096, d, rng), mode);
  const Matrix qs = sample_uniform_box(0.0, 1.0, 1000, d, rng).points();
  for (auto _ : state) {
    for (Index i = 0; i < qs.rows(); ++i) benchmark::DoNotOptimize(index.nearest(qs.row(i)));
  }
  state.SetItemsProcessed(state.iterations() * qs.rows());
}
BENCHMARK(BM_NearestNeighbor)
    ->Args({2, 0})
    ->Args({2, 1})
    ->Args({4, 0})
    ->Args({4, 1})
    ->Args({6, 0})
    ->Args({6, 1})
    ->Args({8, 0})
    ->Args({8, 1})
    ->Args({10, 0})
    ->Args({10, 1})
    ->Unit(benchmark::kMicrosecond);

void BM_SemiDualPopulation(benchmark::State& state) {
  Matrix y(3, 1);
  y << -0.8, 0.1, 0.9;
  Vector nu(3);
  nu << 0.2, 0.5, 0.3;
  const SemiDualProblem prob(midpoint_grid_1d(-1.0, 1.0, 4096), PointCloud(y), nu, 0.05);
  for (auto _ : state) benchmark::DoNotOptimize(semidual::solve_population(prob, 1e-10).values.data());
}
BENCHMARK(BM_SemiDualPopulation)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
