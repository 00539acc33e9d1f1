#include <benchmark/benchmark.h>

#include "qtmtt/agent.hpp"
#include "qtmtt/features.hpp"
#include "qtmtt/rng.hpp"

using namespace qtmtt;

namespace {

StateVector random_state(uint64_t seed) {
  Rng rng(seed);
  StateVector s{};
  for (double& v : s) v = rng.next_double();
  return s;
}

void BM_QNetworkForward(benchmark::State& state) {
  const QNetwork net = QNetwork::seeded(1);
  const StateVector s = random_state(2);
  for (auto _ : state) benchmark::DoNotOptimize(q_values(net, s));
}
BENCHMARK(BM_QNetworkForward);

void BM_SelectTopN(benchmark::State& state) {
  const QNetwork net = QNetwork::seeded(1);
  const QVector q = q_values(net, random_state(3));
  const SplitModeSet legal{SplitMode::NS,  SplitMode::QT,  SplitMode::BTH,
                           SplitMode::BTV, SplitMode::TTH, SplitMode::TTV};
  for (auto _ : state)
    benchmark::DoNotOptimize(select_topN(q, legal, int(state.range(0)), 0.75));
}
BENCHMARK(BM_SelectTopN)->Arg(2)->Arg(4)->Arg(6);

void BM_LossGradient(benchmark::State& state) {
  Rng rng(4);
  const QNetwork net = QNetwork::seeded(1);
  std::vector<Trajectory> batch;
  for (int i = 0; i < 8; ++i) {
    Trajectory t;
    t.qp = 32;
    t.root = CuRect{0, 0, 32, 32, 1, 0, false};
    t.root_state = random_state(rng.next_u64());
    t.root_gt[0] = 1.0;
    ActionRecord a;
    a.action = SplitMode::QT;
    a.delta_split_cost = 0.01;
    for (int sub = 0; sub < 4; ++sub) {
      SubRecord s;
      s.state = random_state(rng.next_u64());
      s.gt_cost = 0.25;
      a.subs.push_back(s);
    }
    t.actions.push_back(a);
    batch.push_back(t);
  }
  std::vector<double> grad;
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_gradient(net, batch, LossWeights{}, grad));
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_LossGradient)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
