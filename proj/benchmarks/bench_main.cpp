#include "ekrom/krylov.hpp"
#include "ekrom/linalg.hpp"
#include "ekrom/rom.hpp"

#include <benchmark/benchmark.h>

namespace {

struct Desk {
  ekrom::GridSpec grid;
  ekrom::StretchedOperator op;
  ekrom::cvec b;

  explicit Desk(int n) {
    grid = ekrom::make_grid(2, {n, n}, {1.0, 1.0}, {8, 8});
    op = ekrom::assemble_operator(grid, ekrom::homogeneous_medium(grid, 1.0), ekrom::build_stretching(grid, 0.5, 2.6));
    b = ekrom::assemble_source(grid, {n / 2, n / 2}, 1.0, 1.5);
  }
};

void BM_Matvec(benchmark::State& state) {
  const Desk desk(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ekrom::matvec(desk.op, desk.b));
  state.counters["N"] = static_cast<double>(desk.op.size());
}
BENCHMARK(BM_Matvec)->Arg(50)->Arg(100)->Arg(200);

void BM_Factorize(benchmark::State& state) {
  const Desk desk(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ekrom::factorize(desk.op));
  state.counters["N"] = static_cast<double>(desk.op.size());
}
BENCHMARK(BM_Factorize)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Solve(benchmark::State& state) {
  const Desk desk(static_cast<int>(state.range(0)));
  const auto fac = ekrom::factorize(desk.op);
  for (auto _ : state) benchmark::DoNotOptimize(fac.solve(desk.b));
  state.counters["N"] = static_cast<double>(desk.op.size());
}
BENCHMARK(BM_Solve)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_EksBuild(benchmark::State& state) {
  const Desk desk(50);
  const auto fac = ekrom::factorize(desk.op);
  const int k = static_cast<int>(state.range(0));
  const int i = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(ekrom::eks_orthogonalize(desk.op, fac, desk.b, k, i));
  state.counters["d"] = k * (i + 1);
}
BENCHMARK(BM_EksBuild)->Args({10, 1})->Args({10, 3})->Args({5, 7})->Unit(benchmark::kMillisecond);

void BM_PksBuild(benchmark::State& state) {
  const Desk desk(50);
  const int m = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(ekrom::pks_lanczos(desk.op, desk.b, m));
}
BENCHMARK(BM_PksBuild)->Arg(40)->Arg(160)->Unit(benchmark::kMillisecond);

void BM_RomFreqSweep(benchmark::State& state) {
  const Desk desk(50);
  const auto fac = ekrom::factorize(desk.op);
  const auto basis = ekrom::eks_orthogonalize(desk.op, fac, desk.b, static_cast<int>(state.range(0)), 3);
  const auto model = ekrom::build_reduced_model(basis, {desk.grid.linear(20, 20)});
  const auto s = ekrom::log_frequency_axis(0.01, 0.75, 64);
  for (auto _ : state) benchmark::DoNotOptimize(ekrom::eval_freq(model, s));
  state.counters["d"] = static_cast<double>(model.d);
}
BENCHMARK(BM_RomFreqSweep)->Arg(10)->Arg(40);

void BM_BuildReducedModel(benchmark::State& state) {
  const Desk desk(50);
  const auto basis = ekrom::pks_lanczos(desk.op, desk.b, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ekrom::build_reduced_model(basis, {desk.grid.linear(20, 20)}));
}
BENCHMARK(BM_BuildReducedModel)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
