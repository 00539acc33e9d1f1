#include <benchmark/benchmark.h>

#include "qtmtt/frame.hpp"
#include "qtmtt/rd_engine.hpp"
#include "qtmtt/rng.hpp"

using namespace qtmtt;

namespace {

Grid<int16_t> random_residual(int w, int h, uint64_t seed) {
  Rng rng(seed);
  Grid<int16_t> r(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) r.at(x, y) = int16_t(int(rng.next_below(101)) - 50);
  return r;
}

void BM_ForwardDct(benchmark::State& state) {
  const int side = int(state.range(0));
  const Grid<int16_t> r = random_residual(side, side, 42);
  for (auto _ : state) benchmark::DoNotOptimize(forward_dct(r));
  state.SetItemsProcessed(int64_t(state.iterations()) * side * side);
}
BENCHMARK(BM_ForwardDct)->Arg(4)->Arg(8)->Arg(16)->Arg(32)->Arg(64);

void BM_TransformQuantize(benchmark::State& state) {
  const int side = int(state.range(0));
  const Grid<int16_t> r = random_residual(side, side, 43);
  for (auto _ : state) benchmark::DoNotOptimize(transform_quantize(r, 32));
  state.SetItemsProcessed(int64_t(state.iterations()) * side * side);
}
BENCHMARK(BM_TransformQuantize)->Arg(4)->Arg(8)->Arg(16)->Arg(32)->Arg(64);

void BM_LeafRdCost(benchmark::State& state) {
  const int side = int(state.range(0));
  Rng rng(44);
  Frame f;
  f.luma = Grid<uint8_t>(64, 64);
  for (auto& v : f.luma.cells()) v = uint8_t(rng.next_below(256));
  const ReconState rs(64, 64);
  const CuRect cu{0, 0, side, side, 0, 0, false};
  for (auto _ : state) benchmark::DoNotOptimize(leaf_rd_cost(f, cu, 32, rs));
  state.SetItemsProcessed(int64_t(state.iterations()) * side * side);
}
BENCHMARK(BM_LeafRdCost)->Arg(4)->Arg(8)->Arg(16)->Arg(32)->Arg(64);

}  // namespace
