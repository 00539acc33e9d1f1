#include <benchmark/benchmark.h>

#include "qtmtt/frame.hpp"
#include "qtmtt/partition.hpp"
#include "qtmtt/rdo_search.hpp"
#include "qtmtt/rng.hpp"

using namespace qtmtt;

namespace {

Frame blocky_frame(int w, int h, uint64_t seed) {
  Rng rng(seed);
  Frame f;
  f.luma = Grid<uint8_t>(w, h);
  for (int by = 0; by < h; by += 8)
    for (int bx = 0; bx < w; bx += 8) {
      const int v = 30 + int(rng.next_below(196));
      for (int y = by; y < by + 8; ++y)
        for (int x = bx; x < bx + 8; ++x) f.luma.at(x, y) = uint8_t(v);
    }
  return f;
}

void BM_SearchExhaustive(benchmark::State& state) {
  PartitionConstraints c;
  c.max_mtt_depth = int(state.range(0));
  const Frame f = blocky_frame(64, 64, 7);
  const CuRect root{0, 0, 64, 64, 0, 0, false};
  for (auto _ : state) {
    ReconState rs(64, 64);
    benchmark::DoNotOptimize(search_exhaustive(f, root, 32, c, rs));
  }
}
BENCHMARK(BM_SearchExhaustive)->Arg(0)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_SearchDepthCapped(benchmark::State& state) {
  const PartitionConstraints c;
  const DepthCapSelector sel(99, int(state.range(0)));
  const Frame f = blocky_frame(64, 64, 7);
  const CuRect root{0, 0, 64, 64, 0, 0, false};
  for (auto _ : state) {
    ReconState rs(64, 64);
    benchmark::DoNotOptimize(search(f, root, 32, c, sel, rs));
  }
}
BENCHMARK(BM_SearchDepthCapped)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_CensusEnumeration(benchmark::State& state) {
  PartitionConstraints c;
  c.max_mtt_depth = int(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_all_cus(64, c));
}
BENCHMARK(BM_CensusEnumeration)->Arg(2)->Arg(3);

}  // namespace
