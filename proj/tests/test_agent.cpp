#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "qtmtt/agent.hpp"
#include "qtmtt/errors.hpp"
#include "qtmtt/rd_engine.hpp"
#include "qtmtt/rng.hpp"

using namespace qtmtt;

namespace {

StateVector random_state(Rng& rng) {
  StateVector s;
  for (double& v : s) v = rng.next_double() * 2.0 - 1.0;
  return s;
}

// A small but structurally complete trajectory for gradient checks.
Trajectory random_trajectory(Rng& rng) {
  Trajectory t;
  t.qp = 32;
  t.frame_id = "synthetic";
  t.root = CuRect{0, 0, 32, 32, 1, 0, false};
  t.root_state = random_state(rng);
  t.root_gt[0] = rng.next_double() * 3.0;
  t.root_gt[2] = rng.next_double() * 3.0;
  t.root_gt[4] = rng.next_double() * 3.0;

  ActionRecord bth;
  bth.action = SplitMode::BTH;
  bth.delta_split_cost = 0.01 * rng.next_double();
  bth.optimal = true;
  for (int i = 0; i < 2; ++i) {
    SubRecord s;
    s.state = random_state(rng);
    s.gt_cost = rng.next_double() * 2.0;
    bth.subs.push_back(s);
  }
  t.actions.push_back(bth);

  ActionRecord tth;
  tth.action = SplitMode::TTH;
  tth.delta_split_cost = 0.02 * rng.next_double();
  for (int i = 0; i < 3; ++i) {
    SubRecord s;
    s.state = random_state(rng);
    s.gt_cost = rng.next_double() * 2.0;
    tth.subs.push_back(s);
  }
  t.actions.push_back(tth);
  return t;
}

}  // namespace

TEST_CASE("network construction is shaped and seeded deterministically") {
  const QNetwork a = QNetwork::seeded(42);
  const QNetwork b = QNetwork::seeded(42);
  const QNetwork c = QNetwork::seeded(43);
  CHECK(a.dims() == std::vector<int>{int(kStateDim), 256, 256, 128, kNumSplitModes});
  CHECK(a.params() == b.params());
  CHECK(a.params() != c.params());
  CHECK(a.step == 0);

  // every bias slot starts at zero, every weight within the init bound
  const QNetwork net = QNetwork::with_dims({int(kStateDim), 8, kNumSplitModes}, 7);
  for (int layer = 0; layer < net.layer_count(); ++layer) {
    const int in = net.dims()[layer], out = net.dims()[layer + 1];
    const double limit = std::sqrt(6.0 / in);
    for (int i = 0; i < out * in; ++i) {
      const double w = net.params()[net.weight_offset(layer) + i];
      CHECK(std::abs(w) <= limit);
    }
    for (int i = 0; i < out; ++i) CHECK(net.params()[net.bias_offset(layer) + i] == 0.0);
  }
}

TEST_CASE("forward pass applies rectifiers on hidden layers only") {
  QNetwork net = QNetwork::with_dims({int(kStateDim), 2, kNumSplitModes}, 1);
  std::fill(net.params().begin(), net.params().end(), 0.0);
  // hidden unit 0 copies x0, hidden unit 1 copies -x0
  net.params()[net.weight_offset(0) + 0] = 1.0;
  net.params()[net.weight_offset(0) + int(kStateDim)] = -1.0;
  // output 0 = h0 + h1, output 1 = h0 - h1 + bias 0.5
  net.params()[net.weight_offset(1) + 0] = 1.0;
  net.params()[net.weight_offset(1) + 1] = 1.0;
  net.params()[net.weight_offset(1) + 2] = 1.0;
  net.params()[net.weight_offset(1) + 3] = -1.0;
  net.params()[net.bias_offset(1) + 1] = 0.5;

  StateVector s{};
  s[0] = 3.0;  // h = (3, 0) after the rectifier
  const QVector q = q_values(net, s);
  CHECK(q[0] == doctest::Approx(3.0));
  CHECK(q[1] == doctest::Approx(3.5));

  s[0] = -2.0;  // h = (0, 2)
  const QVector q2 = q_values(net, s);
  CHECK(q2[0] == doctest::Approx(2.0));
  CHECK(q2[1] == doctest::Approx(-1.5));
}

TEST_CASE("top-n selection keeps the lowest predictions and always no-split") {
  const QVector q{0.2, 0.5, 0.1, 0.9, 0.3, 0.4};
  SplitModeSet legal{SplitMode::NS,  SplitMode::QT,  SplitMode::BTH,
                     SplitMode::BTV, SplitMode::TTH, SplitMode::TTV};
  const SplitModeSet picked = select_topN(q, legal, 2, 1.0);
  CHECK(picked == SplitModeSet{SplitMode::NS, SplitMode::BTH});

  // N=6, T=1 is the identity on any legal set
  for (uint8_t mask = 1; mask < 64; ++mask) {
    SplitModeSet l;
    for (int m = 0; m < kNumSplitModes; ++m)
      if (mask & (1 << m)) l.insert(SplitMode(m));
    const SplitModeSet full = select_topN(q, l, 6, 1.0);
    SplitModeSet expect = l;
    expect.insert(SplitMode::NS);
    CHECK(full == expect);
  }
}

TEST_CASE("selection never returns an illegal mode for any mask") {
  Rng rng(99);
  for (uint8_t mask = 1; mask < 64; ++mask) {
    SplitModeSet legal;
    for (int m = 0; m < kNumSplitModes; ++m)
      if (mask & (1 << m)) legal.insert(SplitMode(m));
    for (int rep = 0; rep < 8; ++rep) {
      QVector q;
      for (double& v : q) v = rng.next_double();
      for (int n = 1; n <= 6; ++n) {
        const SplitModeSet got = select_topN(q, legal, n, rng.next_double());
        for (SplitMode m : got.to_vector())
          CHECK((m == SplitMode::NS || legal.contains(m)));
        CHECK(got.contains(SplitMode::NS));
        // the legal argmin always survives N>=1 with T=1
        const SplitModeSet keep1 = select_topN(q, legal, 1, 1.0);
        SplitMode argmin = SplitMode::NS;
        double best = 1e300;
        for (SplitMode m : legal.to_vector())
          if (q[index_of(m)] < best) {
            best = q[index_of(m)];
            argmin = m;
          }
        CHECK(keep1.contains(argmin));
      }
    }
  }
}

TEST_CASE("threshold zero keeps only ties with the minimum") {
  const QVector q{0.5, 0.1, 0.1, 0.9, 0.2, 0.3};
  SplitModeSet legal{SplitMode::QT, SplitMode::BTH, SplitMode::TTH, SplitMode::TTV};
  const SplitModeSet got = select_topN(q, legal, 6, 0.0);
  CHECK(got == SplitModeSet{SplitMode::NS, SplitMode::QT, SplitMode::BTH});
}

TEST_CASE("composite loss vanishes at consistent ground truth") {
  Trajectory t;
  t.root = CuRect{0, 0, 32, 32, 1, 0, false};
  t.root_gt[0] = 1.5;
  t.root_gt[2] = 1.0;
  ActionRecord a;
  a.action = SplitMode::BTH;
  a.delta_split_cost = 0.25;
  a.subs.resize(2);
  a.subs[0].gt_cost = 0.5;
  a.subs[1].gt_cost = 0.25;  // 0.5 + 0.25 + 0.25 == root gt for BTH
  t.actions.push_back(a);

  TrajectoryPredictions pred;
  pred.root = QVector{1.5, 0.0, 1.0, 0.0, 0.0, 0.0};
  pred.subs.resize(1);
  pred.subs[0].resize(2);
  pred.subs[0][0] = QVector{0.5, 0.6, 0.7, 0.8, 0.9, 1.0};  // min = gt = 0.5
  pred.subs[0][1] = QVector{0.9, 0.25, 0.9, 0.9, 0.9, 0.9};
  const LossBreakdown l = composite_loss(pred, t, LossWeights{});
  CHECK(l.mse1 == 0.0);
  CHECK(l.mse2 == 0.0);
  CHECK(l.mse3 == 0.0);
  CHECK(l.total == 0.0);
}

TEST_CASE("level-2 consistency penalty matches the worked example") {
  // Root predicts 10 for the action; the two children predict 3 and 4 and the
  // split itself costs 2, so the residual is 10 - (3 + 4 + 2) = 1.
  Trajectory t;
  t.root = CuRect{0, 0, 32, 32, 1, 0, false};
  t.root_gt[2] = 9.0;
  ActionRecord a;
  a.action = SplitMode::BTH;
  a.delta_split_cost = 2.0;
  a.subs.resize(2);
  a.subs[0].gt_cost = 3.0;
  a.subs[1].gt_cost = 4.0;
  t.actions.push_back(a);

  TrajectoryPredictions pred;
  pred.root = QVector{0.0, 0.0, 10.0, 0.0, 0.0, 0.0};
  pred.subs.resize(1);
  pred.subs[0].resize(2);
  pred.subs[0][0] = QVector{3.0, 5.0, 5.0, 5.0, 5.0, 5.0};
  pred.subs[0][1] = QVector{4.0, 5.0, 5.0, 5.0, 5.0, 5.0};
  const LossBreakdown l = composite_loss(pred, t, LossWeights{});
  CHECK(l.mse3 == 1.0);
  // mse1 only sees the one available root slot: (10-9)^2
  CHECK(l.mse1 == 1.0);
  // mse2 averages the two sub errors: both exact
  CHECK(l.mse2 == 0.0);
  CHECK(l.total == 2.0);
}

TEST_CASE("batch gradient matches central finite differences") {
  Rng rng(2024);
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    QNetwork net = QNetwork::with_dims({int(kStateDim), 6, kNumSplitModes}, 100 + inst);
    // jitter every parameter: freshly seeded nets have all-zero biases, so an
    // input gating off the whole hidden layer ties all outputs at exactly 0,
    // and a finite-difference probe of an output bias straddles the argmin
    // kink.  Generic weights keep the loss differentiable at the probe.
    for (double& p : net.params()) p += 0.05 * (rng.next_double() * 2.0 - 1.0);
    std::vector<Trajectory> batch{random_trajectory(rng), random_trajectory(rng)};
    const LossWeights w{1.0, 1.0, 1.0};

    std::vector<double> grad;
    loss_gradient(net, batch, w, grad);
    REQUIRE(grad.size() == net.params().size());

    // probe a deterministic subset of parameters (all of them is slow)
    const double eps = 1e-6;
    for (size_t k = 0; k < grad.size(); k += 7) {
      const double save = net.params()[k];
      net.params()[k] = save + eps;
      double up = 0.0, down = 0.0;
      {
        LossBreakdown l{};
        for (const Trajectory& t : batch) {
          const LossBreakdown one = composite_loss(predict_trajectory(net, t), t, w);
          l.total += one.total;
        }
        up = l.total / batch.size();
      }
      net.params()[k] = save - eps;
      {
        LossBreakdown l{};
        for (const Trajectory& t : batch) {
          const LossBreakdown one = composite_loss(predict_trajectory(net, t), t, w);
          l.total += one.total;
        }
        down = l.total / batch.size();
      }
      net.params()[k] = save;
      const double fd = (up - down) / (2.0 * eps);
      const double denom = std::max({std::abs(fd), std::abs(grad[k]), 1e-4});
      worst = std::max(worst, std::abs(fd - grad[k]) / denom);
    }
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("training reduces the loss and writes checkpoints") {
  Rng rng(5);
  std::vector<Trajectory> data;
  for (int i = 0; i < 8; ++i) data.push_back(random_trajectory(rng));

  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.002;
  cfg.seed = 11;
  const auto dir = std::filesystem::temp_directory_path() / "qtmtt_train_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  cfg.checkpoint_dir = dir.string();

  const TrainResult r = train(data, QNetwork::seeded(1), cfg);
  REQUIRE(r.history.size() == size_t(cfg.epochs));
  CHECK(r.history.back().loss.total < r.history.front().loss.total);
  CHECK(r.net.step == cfg.epochs);
  CHECK(std::filesystem::exists(dir / "model_epoch001.txt"));
  CHECK(std::filesystem::exists(dir / "model_epoch030.txt"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("single consistent trajectory overfits to near zero") {
  Rng rng(17);
  // a self-consistent target (parent gt = child sum + split charge) makes
  // zero loss attainable; random parent gts would leave an irreducible
  // conflict between the regression and consistency terms
  Trajectory t = random_trajectory(rng);
  for (const ActionRecord& a : t.actions) {
    double sum = a.delta_split_cost;
    for (const SubRecord& s : a.subs) sum += s.gt_cost;
    t.root_gt[index_of(a.action)] = sum;
  }
  std::vector<Trajectory> data{t};
  TrainConfig cfg;
  cfg.epochs = 400;
  cfg.batch_size = 1;
  cfg.learning_rate = 0.003;
  cfg.lr_decay_epochs = 1000;
  cfg.seed = 2;
  const TrainResult r = train(data, QNetwork::seeded(9), cfg);
  CHECK(r.history.back().loss.total < 1e-6);
}

TEST_CASE("model files round-trip bit-exactly") {
  const QNetwork net = QNetwork::seeded(77);
  const auto path = (std::filesystem::temp_directory_path() / "qtmtt_model.txt").string();
  save_model(net, path);
  const QNetwork back = load_model(path);
  CHECK(back.dims() == net.dims());
  CHECK(back.step == net.step);
  CHECK(back.params() == net.params());

  // truncation is an i/o error
  {
    std::filesystem::resize_file(path, std::filesystem::file_size(path) / 2);
    CHECK_THROWS_AS(load_model(path), IoError);
  }
  std::filesystem::remove(path);
}

TEST_CASE("loading a model with a foreign feature width is a config error") {
  QNetwork net = QNetwork::with_dims({int(kStateDim), 4, kNumSplitModes}, 3);
  const auto path = (std::filesystem::temp_directory_path() / "qtmtt_model_dim.txt").string();
  save_model(net, path);
  // rewrite the dims line to claim a different input width
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  const std::string needle = "dims 3 " + std::to_string(kStateDim);
  const auto pos = text.find(needle);
  REQUIRE(pos != std::string::npos);
  text.replace(pos, needle.size(), "dims 3 52");
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  CHECK_THROWS_AS(load_model(path), ConfigError);
  std::filesystem::remove(path);
}

TEST_CASE("agent and random selectors act only on supported shapes") {
  CHECK(agent_supports(32, 32));
  CHECK(agent_supports(16, 16));
  CHECK(agent_supports(32, 16));
  CHECK(agent_supports(16, 32));
  CHECK(agent_supports(8, 32));
  CHECK(agent_supports(32, 8));
  CHECK_FALSE(agent_supports(64, 64));
  CHECK_FALSE(agent_supports(8, 8));
  CHECK_FALSE(agent_supports(4, 32));

  const QNetwork net = QNetwork::seeded(3);
  const AgentSelector agent(&net, 2, 1.0);
  const RandomSelector random(9, 2);
  StateVector s{};
  const SplitModeSet legal{SplitMode::NS, SplitMode::QT, SplitMode::BTH, SplitMode::BTV};

  SelectorContext big{CuRect{0, 0, 64, 64, 0, 0, false}, s, legal, 32};
  CHECK(agent.select(big) == legal);   // unsupported: hands back the legal set
  CHECK(random.select(big) == legal);

  SelectorContext mid{CuRect{0, 0, 32, 32, 1, 0, false}, s, legal, 32};
  const SplitModeSet a = agent.select(mid);
  CHECK(a.size() <= 3);  // two picks plus forced no-split
  CHECK(a.contains(SplitMode::NS));
  for (SplitMode m : a.to_vector()) CHECK(legal.contains(m));
  const SplitModeSet r = random.select(mid);
  CHECK(r.size() <= 3);
  CHECK(r.contains(SplitMode::NS));
  for (SplitMode m : r.to_vector()) CHECK(legal.contains(m));
}

TEST_CASE("trajectory cost scale follows the lagrangian") {
  CHECK(trajectory_cost_scale(32) == doctest::Approx(lambda_of_qp(32) * 1024.0));
  CHECK(trajectory_cost_scale(22) < trajectory_cost_scale(37));
}
