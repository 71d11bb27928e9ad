#include <benchmark/benchmark.h>

#include "nsmfm/estimators.hpp"
#include "nsmfm/linalg.hpp"
#include "nsmfm/model.hpp"
#include "nsmfm/ranksel.hpp"

using namespace nsmfm;

namespace {

MatrixPanel draw(Index p1, Index p2, Index T) {
  DgpConfig c;
  c.p1 = p1;
  c.p2 = p2;
  c.T = T;
  c.ranks = {2, 1, 1, 1};
  c.seed = 42;
  return simulate(c).panel;
}

void BM_SymEig(benchmark::State& state) {
  const Index n = state.range(0);
  const Matrix a = Matrix::Random(n, n);
  const SymmetricMatrix s(a * a.transpose());
  for (auto _ : state) benchmark::DoNotOptimize(sym_eig_desc(s));
}
BENCHMARK(BM_SymEig)->Arg(20)->Arg(50)->Arg(100)->Arg(200);

void BM_FlattenedCovariances(benchmark::State& state) {
  const MatrixPanel x = draw(state.range(0), 20, state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(flattened_covariances(x));
}
BENCHMARK(BM_FlattenedCovariances)->Args({20, 50})->Args({50, 100})->Args({100, 200});

void BM_Pipeline(benchmark::State& state) {
  const MatrixPanel x = draw(state.range(0), 20, state.range(1));
  const Ranks h{2, 1, 1, 1};
  for (auto _ : state) benchmark::DoNotOptimize(estimate_pipeline(x, h));
}
BENCHMARK(BM_Pipeline)->Args({20, 50})->Args({50, 100})->Args({100, 200});

void BM_RankGraph(benchmark::State& state) {
  const MatrixPanel x = draw(state.range(0), 20, 50);
  ErConfig cfg;
  cfg.hMax = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(build_rank_graph(x, cfg));
}
BENCHMARK(BM_RankGraph)->Args({20, 4})->Args({100, 4})->Args({100, 8})->Unit(benchmark::kMillisecond);

void BM_SelectAll(benchmark::State& state) {
  const MatrixPanel x = draw(state.range(0), 20, 50);
  ErConfig cfg;
  cfg.hMax = 4;
  for (auto _ : state) benchmark::DoNotOptimize(select_all(x, cfg));
}
BENCHMARK(BM_SelectAll)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
