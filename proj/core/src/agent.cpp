#include "qtmtt/agent.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>

#include "qtmtt/encoder.hpp"
#include "qtmtt/errors.hpp"
#include "qtmtt/io.hpp"

namespace qtmtt {

double trajectory_cost_scale(int qp) {
  return lambda_of_qp(qp) * double(kTrajectoryRootSide) * double(kTrajectoryRootSide);
}

bool agent_supports(int width, int height) {
  return (width == 32 && height == 32) || (width == 16 && height == 16) ||
         (width == 32 && height == 16) || (width == 16 && height == 32) ||
         (width == 8 && height == 32) || (width == 32 && height == 8);
}

// ---------------------------------------------------------------------------
// network

QNetwork QNetwork::seeded(uint64_t seed) {
  return with_dims({kStateDim, 256, 256, 128, kNumSplitModes}, seed);
}

QNetwork QNetwork::with_dims(std::vector<int> dims, uint64_t seed) {
  if (dims.size() < 2) throw ConfigError("network needs at least one layer");
  if (dims.front() != kStateDim)
    throw ConfigError("network input dimension must be " + std::to_string(kStateDim));
  if (dims.back() != kNumSplitModes)
    throw ConfigError("network output dimension must be " + std::to_string(kNumSplitModes));
  for (int d : dims)
    if (d <= 0) throw ConfigError("network layer sizes must be positive");

  QNetwork net;
  net.dims_ = std::move(dims);
  size_t count = 0;
  for (int l = 0; l + 1 < int(net.dims_.size()); ++l)
    count += size_t(net.dims_[l + 1]) * net.dims_[l] + net.dims_[l + 1];
  net.params_.assign(count, 0.0);

  Rng rng(seed);
  size_t at = 0;
  for (int l = 0; l + 1 < int(net.dims_.size()); ++l) {
    const int fan_in = net.dims_[l];
    const int fan_out = net.dims_[l + 1];
    const double limit = std::sqrt(6.0 / fan_in);
    for (int i = 0; i < fan_out * fan_in; ++i)
      net.params_[at++] = (2.0 * rng.next_double() - 1.0) * limit;
    at += size_t(fan_out);  // biases stay zero
  }
  return net;
}

size_t QNetwork::weight_offset(int l) const {
  size_t at = 0;
  for (int k = 0; k < l; ++k) at += size_t(dims_[k + 1]) * dims_[k] + dims_[k + 1];
  return at;
}

size_t QNetwork::bias_offset(int l) const {
  return weight_offset(l) + size_t(dims_[l + 1]) * dims_[l];
}

namespace {

// Post-activation values per layer; acts[0] is the input.  ReLU derivative is
// recoverable from the post-activation sign.
struct ForwardCache {
  std::vector<std::vector<double>> acts;
};

void forward_into(const QNetwork& net, std::span<const double> input, ForwardCache& cache) {
  const auto& dims = net.dims();
  const auto& p = net.params();
  cache.acts.resize(dims.size());
  cache.acts[0].assign(input.begin(), input.end());
  for (int l = 0; l + 1 < int(dims.size()); ++l) {
    const int in = dims[l], out = dims[l + 1];
    const double* w = p.data() + net.weight_offset(l);
    const double* b = p.data() + net.bias_offset(l);
    const std::vector<double>& x = cache.acts[l];
    std::vector<double>& y = cache.acts[l + 1];
    y.assign(size_t(out), 0.0);
    const bool relu = l + 2 < int(dims.size());
    for (int o = 0; o < out; ++o) {
      const double* row = w + size_t(o) * in;
      double acc = b[o];
      for (int i = 0; i < in; ++i) acc += row[i] * x[i];
      y[o] = relu && acc < 0.0 ? 0.0 : acc;
    }
  }
}

// Accumulates parameter gradients for one sample given dL/d(output).
void backward_into(const QNetwork& net, const ForwardCache& cache, std::span<const double> dout,
                   std::vector<double>& grad) {
  const auto& dims = net.dims();
  const auto& p = net.params();
  std::vector<double> delta(dout.begin(), dout.end());
  for (int l = int(dims.size()) - 2; l >= 0; --l) {
    const int in = dims[l], out = dims[l + 1];
    const double* w = p.data() + net.weight_offset(l);
    double* gw = grad.data() + net.weight_offset(l);
    double* gb = grad.data() + net.bias_offset(l);
    const std::vector<double>& x = cache.acts[l];
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      gb[o] += d;
      double* grow = gw + size_t(o) * in;
      for (int i = 0; i < in; ++i) grow[i] += d * x[i];
    }
    if (l == 0) break;
    std::vector<double> prev(size_t(in), 0.0);
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* row = w + size_t(o) * in;
      for (int i = 0; i < in; ++i) prev[i] += d * row[i];
    }
    // ReLU gate of the layer below (post-activation is zero where clamped).
    const std::vector<double>& below = cache.acts[l];
    for (int i = 0; i < in; ++i)
      if (below[i] <= 0.0) prev[i] = 0.0;
    delta = std::move(prev);
  }
}

int min_slot(const QVector& q) {
  int best = 0;
  for (int i = 1; i < kNumSplitModes; ++i)
    if (q[i] < q[best]) best = i;
  return best;
}

}  // namespace

std::vector<double> forward(const QNetwork& net, std::span<const double> input) {
  if (int(input.size()) != net.input_dim())
    throw ConfigError("forward: input dimension mismatch");
  ForwardCache cache;
  forward_into(net, input, cache);
  return cache.acts.back();
}

QVector q_values(const QNetwork& net, const StateVector& s) {
  const std::vector<double> out = forward(net, std::span<const double>(s.data(), s.size()));
  QVector q{};
  std::copy(out.begin(), out.end(), q.begin());
  return q;
}

SplitModeSet select_topN(const QVector& q, const SplitModeSet& legal, int n, double threshold) {
  std::vector<SplitMode> modes = legal.to_vector();
  if (modes.empty()) return legal;
  std::sort(modes.begin(), modes.end(), [&](SplitMode a, SplitMode b) {
    const double qa = q[index_of(a)], qb = q[index_of(b)];
    return qa < qb || (qa == qb && index_of(a) < index_of(b));
  });
  const int keep = std::min(std::max(n, 1), int(modes.size()));
  const double q_min = q[index_of(modes.front())];
  const double q_max = q[index_of(modes.back())];

  SplitModeSet out;
  for (int i = 0; i < keep; ++i) {
    const double qi = q[index_of(modes[i])];
    if (i > 0 && q_max > q_min && (qi - q_min) / (q_max - q_min) > threshold) continue;
    out.insert(modes[i]);
  }
  out.insert(SplitMode::NS);
  return out;
}

// ---------------------------------------------------------------------------
// loss

TrajectoryPredictions predict_trajectory(const QNetwork& net, const Trajectory& t) {
  TrajectoryPredictions pred;
  pred.root = q_values(net, t.root_state);
  pred.subs.reserve(t.actions.size());
  for (const ActionRecord& act : t.actions) {
    std::vector<QVector> qs;
    qs.reserve(act.subs.size());
    for (const SubRecord& sub : act.subs) qs.push_back(q_values(net, sub.state));
    pred.subs.push_back(std::move(qs));
  }
  return pred;
}

LossBreakdown composite_loss(const TrajectoryPredictions& pred, const Trajectory& t,
                             const LossWeights& w) {
  if (pred.subs.size() != t.actions.size())
    throw ConfigError("composite_loss: prediction shape does not match the trajectory");

  LossBreakdown out;
  int n_avail = 0;
  for (int a = 0; a < kNumSplitModes; ++a) {
    if (!t.root_gt[a]) continue;
    const double d = pred.root[a] - *t.root_gt[a];
    out.mse1 += d * d;
    ++n_avail;
  }
  if (n_avail == 0) throw ConfigError("trajectory has no available root actions");
  out.mse1 /= n_avail;

  int n_subs = 0, n_actions = 0;
  for (size_t ai = 0; ai < t.actions.size(); ++ai) {
    const ActionRecord& act = t.actions[ai];
    if (pred.subs[ai].size() != act.subs.size())
      throw ConfigError("composite_loss: sub-record shape mismatch");
    double child_sum = 0.0;
    for (size_t si = 0; si < act.subs.size(); ++si) {
      const double q_min = pred.subs[ai][si][min_slot(pred.subs[ai][si])];
      const double d = q_min - act.subs[si].gt_cost;
      out.mse2 += d * d;
      ++n_subs;
      child_sum += q_min;
    }
    const double resid = pred.root[index_of(act.action)] - (child_sum + act.delta_split_cost);
    out.mse3 += resid * resid;
    ++n_actions;
  }
  if (n_subs > 0) out.mse2 /= n_subs;
  if (n_actions > 0) out.mse3 /= n_actions;
  out.total = w.a1 * out.mse1 + w.a2 * out.mse2 + w.a3 * out.mse3;
  return out;
}

namespace {

// Loss + gradient for one trajectory, accumulated into grad (unscaled; the
// caller divides by the batch size).
LossBreakdown trajectory_gradient(const QNetwork& net, const Trajectory& t, const LossWeights& w,
                                  std::vector<double>& grad) {
  ForwardCache root_cache;
  forward_into(net, std::span<const double>(t.root_state.data(), t.root_state.size()), root_cache);
  const std::vector<double>& root_q = root_cache.acts.back();

  std::vector<std::vector<ForwardCache>> sub_caches(t.actions.size());
  TrajectoryPredictions pred;
  std::copy(root_q.begin(), root_q.end(), pred.root.begin());
  pred.subs.resize(t.actions.size());
  for (size_t ai = 0; ai < t.actions.size(); ++ai) {
    sub_caches[ai].resize(t.actions[ai].subs.size());
    pred.subs[ai].resize(t.actions[ai].subs.size());
    for (size_t si = 0; si < t.actions[ai].subs.size(); ++si) {
      const StateVector& s = t.actions[ai].subs[si].state;
      forward_into(net, std::span<const double>(s.data(), s.size()), sub_caches[ai][si]);
      std::copy(sub_caches[ai][si].acts.back().begin(), sub_caches[ai][si].acts.back().end(),
                pred.subs[ai][si].begin());
    }
  }

  const LossBreakdown loss = composite_loss(pred, t, w);

  // dL/d(outputs).
  std::array<double, kNumSplitModes> droot{};
  int n_avail = 0;
  for (int a = 0; a < kNumSplitModes; ++a)
    if (t.root_gt[a]) ++n_avail;
  for (int a = 0; a < kNumSplitModes; ++a)
    if (t.root_gt[a]) droot[a] += w.a1 * 2.0 * (pred.root[a] - *t.root_gt[a]) / n_avail;

  int n_subs = 0;
  for (const ActionRecord& act : t.actions) n_subs += int(act.subs.size());
  const int n_actions = int(t.actions.size());

  std::vector<std::vector<std::array<double, kNumSplitModes>>> dsubs(t.actions.size());
  for (size_t ai = 0; ai < t.actions.size(); ++ai)
    dsubs[ai].assign(t.actions[ai].subs.size(), std::array<double, kNumSplitModes>{});

  for (size_t ai = 0; ai < t.actions.size(); ++ai) {
    const ActionRecord& act = t.actions[ai];
    double child_sum = 0.0;
    for (size_t si = 0; si < act.subs.size(); ++si) {
      const int k = min_slot(pred.subs[ai][si]);
      const double q_min = pred.subs[ai][si][k];
      child_sum += q_min;
      if (n_subs > 0)
        dsubs[ai][si][k] += w.a2 * 2.0 * (q_min - act.subs[si].gt_cost) / n_subs;
    }
    const double resid = pred.root[index_of(act.action)] - (child_sum + act.delta_split_cost);
    const double dresid = w.a3 * 2.0 * resid / n_actions;
    droot[index_of(act.action)] += dresid;
    for (size_t si = 0; si < act.subs.size(); ++si)
      dsubs[ai][si][min_slot(pred.subs[ai][si])] -= dresid;  // through the child min
  }

  backward_into(net, root_cache, std::span<const double>(droot.data(), droot.size()), grad);
  for (size_t ai = 0; ai < t.actions.size(); ++ai)
    for (size_t si = 0; si < t.actions[ai].subs.size(); ++si)
      backward_into(net, sub_caches[ai][si],
                    std::span<const double>(dsubs[ai][si].data(), dsubs[ai][si].size()), grad);
  return loss;
}

LossBreakdown batch_gradient(const QNetwork& net, std::span<const Trajectory* const> batch,
                             const LossWeights& w, std::vector<double>& grad) {
  if (batch.empty()) throw ConfigError("loss_gradient: empty batch");
  grad.assign(net.param_count(), 0.0);
  LossBreakdown total;
  for (const Trajectory* t : batch) {
    const LossBreakdown one = trajectory_gradient(net, *t, w, grad);
    total.mse1 += one.mse1;
    total.mse2 += one.mse2;
    total.mse3 += one.mse3;
    total.total += one.total;
  }
  const double inv = 1.0 / double(batch.size());
  for (double& g : grad) g *= inv;
  total.mse1 *= inv;
  total.mse2 *= inv;
  total.mse3 *= inv;
  total.total *= inv;
  return total;
}

}  // namespace

LossBreakdown loss_gradient(const QNetwork& net, std::span<const Trajectory> batch,
                            const LossWeights& w, std::vector<double>& grad) {
  std::vector<const Trajectory*> ptrs;
  ptrs.reserve(batch.size());
  for (const Trajectory& t : batch) ptrs.push_back(&t);
  return batch_gradient(net, ptrs, w, grad);
}

// ---------------------------------------------------------------------------
// training

TrainResult train(const std::vector<Trajectory>& dataset, QNetwork net, const TrainConfig& cfg) {
  if (dataset.empty()) throw ConfigError("train: empty dataset");
  if (cfg.batch_size <= 0 || cfg.epochs < 0) throw ConfigError("train: bad batch size or epochs");

  Rng rng(cfg.seed);
  std::vector<size_t> order(dataset.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> grad(net.param_count());
  std::vector<double> velocity(net.param_count(), 0.0);
  TrainResult result;
  double lr = cfg.learning_rate;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (epoch > 0 && cfg.lr_decay_epochs > 0 && epoch % cfg.lr_decay_epochs == 0)
      lr *= cfg.lr_decay;
    // Fisher-Yates on our own generator, so shuffles are portable.
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.next_below(i)]);

    for (size_t start = 0; start < order.size(); start += size_t(cfg.batch_size)) {
      const size_t stop = std::min(order.size(), start + size_t(cfg.batch_size));
      std::vector<const Trajectory*> batch;
      batch.reserve(stop - start);
      for (size_t i = start; i < stop; ++i) batch.push_back(&dataset[order[i]]);

      const LossBreakdown loss = batch_gradient(net, batch, cfg.weights, grad);
      if (!std::isfinite(loss.total))
        throw NumericError("training loss became non-finite at step " +
                           std::to_string(net.step + 1));
      if (cfg.max_grad_norm > 0.0) {
        double sq = 0.0;
        for (double g : grad) sq += g * g;
        const double norm = std::sqrt(sq);
        if (norm > cfg.max_grad_norm)
          for (double& g : grad) g *= cfg.max_grad_norm / norm;
      }
      auto& p = net.params();
      for (size_t i = 0; i < p.size(); ++i) {
        velocity[i] = cfg.momentum * velocity[i] - lr * grad[i];
        p[i] += velocity[i];
      }
      net.step += 1;
      result.history.push_back(TrainStep{net.step, loss});
    }

    if (!cfg.checkpoint_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "model_epoch%03d.txt", epoch + 1);
      save_model(net, (std::filesystem::path(cfg.checkpoint_dir) / name).string());
    }
  }
  result.net = std::move(net);
  return result;
}

// ---------------------------------------------------------------------------
// model persistence

void save_model(const QNetwork& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file: " + path);
  out << "qtmtt-model v1\n";
  out << "step " << net.step << "\n";
  out << "dims " << net.dims().size();
  for (int d : net.dims()) out << ' ' << d;
  out << "\n";
  const auto& p = net.params();
  for (int l = 0; l + 1 < int(net.dims().size()); ++l) {
    out << "layer " << l << "\n";
    const int in = net.dims()[l], rows = net.dims()[l + 1];
    const double* w = p.data() + net.weight_offset(l);
    for (int o = 0; o < rows; ++o) {
      for (int i = 0; i < in; ++i) out << (i ? " " : "") << format_double(w[size_t(o) * in + i]);
      out << "\n";
    }
    const double* b = p.data() + net.bias_offset(l);
    out << "bias";
    for (int o = 0; o < rows; ++o) out << ' ' << format_double(b[o]);
    out << "\n";
  }
  out << "end\n";
  if (!out) throw IoError("failed writing model file: " + path);
}

QNetwork load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read model file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty model file: " + path);
  if (line != "qtmtt-model v1") throw IoError("unsupported model version in " + path);

  std::string tok;
  auto need = [&](const char* what) {
    if (!(in >> tok)) throw IoError(std::string("truncated model file (expected ") + what + ")");
    return tok;
  };
  auto need_double = [&](const char* what) { return parse_double(need(what)); };

  if (need("step") != "step") throw IoError("malformed model file: missing step");
  int64_t step = 0;
  in >> step;
  if (!in) throw IoError("malformed model file: bad step");
  if (need("dims") != "dims") throw IoError("malformed model file: missing dims");
  size_t ndims = 0;
  in >> ndims;
  if (!in || ndims < 2 || ndims > 64) throw IoError("malformed model file: bad dims count");
  std::vector<int> dims(ndims);
  for (auto& d : dims) {
    in >> d;
    if (!in || d <= 0) throw IoError("malformed model file: bad layer size");
  }
  if (dims.front() != kStateDim)
    throw ConfigError("model feature dimension " + std::to_string(dims.front()) +
                      " does not match the expected " + std::to_string(kStateDim));
  if (dims.back() != kNumSplitModes)
    throw ConfigError("model output dimension must be " + std::to_string(kNumSplitModes));

  QNetwork net = QNetwork::with_dims(dims, 0);
  net.step = step;
  auto& p = net.params();
  for (int l = 0; l + 1 < int(dims.size()); ++l) {
    if (need("layer") != "layer") throw IoError("malformed model file: missing layer header");
    int idx = -1;
    in >> idx;
    if (!in || idx != l) throw IoError("malformed model file: layer index mismatch");
    const int in_dim = dims[l], rows = dims[l + 1];
    double* w = p.data() + net.weight_offset(l);
    for (int o = 0; o < rows; ++o)
      for (int i = 0; i < in_dim; ++i) w[size_t(o) * in_dim + i] = need_double("weight");
    if (need("bias") != "bias") throw IoError("malformed model file: missing bias row");
    double* b = p.data() + net.bias_offset(l);
    for (int o = 0; o < rows; ++o) b[o] = need_double("bias value");
  }
  if (need("end") != "end") throw IoError("malformed model file: missing end marker");
  return net;
}

// ---------------------------------------------------------------------------
// selectors

AgentSelector::AgentSelector(const QNetwork* net, int topn, double threshold)
    : net_(net), topn_(topn), threshold_(threshold) {
  if (!net_) throw ConfigError("agent selector needs a model");
  if (topn_ < 1 || topn_ > kNumSplitModes) throw ConfigError("topn must be in [1,6]");
  if (threshold_ < 0.0 || threshold_ > 1.0) throw ConfigError("threshold must be in [0,1]");
}

SplitModeSet AgentSelector::select(const SelectorContext& ctx) const {
  if (!agent_supports(ctx.cu.width, ctx.cu.height)) return ctx.legal;
  return select_topN(q_values(*net_, ctx.state), ctx.legal, topn_, threshold_);
}

RandomSelector::RandomSelector(uint64_t seed, int n) : rng_(seed), n_(n) {
  if (n_ < 1 || n_ > kNumSplitModes) throw ConfigError("topn must be in [1,6]");
}

SplitModeSet RandomSelector::select(const SelectorContext& ctx) const {
  if (!agent_supports(ctx.cu.width, ctx.cu.height)) return ctx.legal;
  std::vector<SplitMode> modes = ctx.legal.to_vector();
  const std::lock_guard<std::mutex> lock(mu_);
  const int keep = std::min(n_, int(modes.size()));
  SplitModeSet out;
  for (int i = 0; i < keep; ++i) {
    const size_t j = i + rng_.next_below(modes.size() - i);
    std::swap(modes[i], modes[j]);
    out.insert(modes[i]);
  }
  out.insert(SplitMode::NS);
  return out;
}

std::unique_ptr<SplitSelector> make_selector(const SelectorSpec& spec, const QNetwork* net) {
  switch (spec.kind) {
    case SelectorSpec::Kind::Exhaustive: return std::make_unique<ExhaustiveSelector>();
    case SelectorSpec::Kind::DepthCap:
      return std::make_unique<DepthCapSelector>(spec.qt_cap, spec.mtt_cap);
    case SelectorSpec::Kind::Agent:
      if (!net) throw ConfigError("selector '" + spec.label + "' needs a model");
      return std::make_unique<AgentSelector>(net, spec.topn, spec.threshold);
    case SelectorSpec::Kind::Random:
      return std::make_unique<RandomSelector>(spec.seed, spec.topn);
  }
  throw ConfigError("unknown selector kind");
}

// ---------------------------------------------------------------------------
// trajectory collection

namespace {

class TrajectoryCollector final : public SearchObserver {
 public:
  TrajectoryCollector(const QNetwork& policy, double epsilon, uint64_t seed, int qp, int mtt_cap,
                      std::string frame_id)
      : policy_(policy), epsilon_(epsilon), rng_(seed), qp_(qp), mtt_cap_(mtt_cap),
        frame_id_(std::move(frame_id)) {}

  bool wants_node(const CuRect& cu) const override {
    return cu.width == kTrajectoryRootSide && cu.height == kTrajectoryRootSide &&
           cu.mtt_depth == 0;
  }

  void on_node(const NodeRecord& rec) override {
    const double scale = trajectory_cost_scale(qp_);
    Trajectory t;
    t.qp = qp_;
    t.mtt_cap = mtt_cap_;
    t.frame_id = frame_id_;
    t.root = rec.cu;
    t.root_state = rec.state;
    for (const NodeCandidate& cand : rec.candidates)
      t.root_gt[index_of(cand.mode)] = cand.cost / scale;

    // Greedy action of the current policy (over everything legal here).
    const QVector q = q_values(policy_, rec.state);
    SplitMode greedy = SplitMode::NS;
    bool have = false;
    for (SplitMode m : rec.legal.to_vector()) {
      if (!have || q[index_of(m)] < q[index_of(greedy)]) {
        greedy = m;
        have = true;
      }
    }

    for (const NodeCandidate& cand : rec.candidates) {
      if (cand.mode == SplitMode::NS) continue;
      const bool coin = rng_.next_double() < epsilon_;
      if (!(cand.mode == greedy || cand.mode == rec.chosen || coin)) continue;
      ActionRecord act;
      act.action = cand.mode;
      act.delta_split_cost = cand.signal_cost / scale;
      act.optimal = cand.mode == rec.chosen;
      act.subs.reserve(cand.children.size());
      for (const NodeChildRecord& ch : cand.children)
        act.subs.push_back(SubRecord{ch.state, ch.best_cost / scale});
      t.actions.push_back(std::move(act));
    }
    out.push_back(std::move(t));
  }

  std::vector<Trajectory> out;

 private:
  const QNetwork& policy_;
  double epsilon_;
  Rng rng_;
  int qp_;
  int mtt_cap_;
  std::string frame_id_;
};

}  // namespace

std::vector<Trajectory> collect_trajectories(const std::vector<NamedFrame>& frames,
                                             const CollectConfig& cfg, const QNetwork* policy) {
  if (cfg.epsilon < 0.0 || cfg.epsilon > 1.0) throw ConfigError("epsilon must be in [0,1]");
  QNetwork fallback;
  if (!policy) {
    fallback = QNetwork::seeded(cfg.seed);
    policy = &fallback;
  }

  std::vector<Trajectory> all;
  for (size_t fi = 0; fi < frames.size(); ++fi) {
    for (int cap : cfg.mtt_caps) {
      for (int qp : cfg.qps) {
        PartitionConstraints c = cfg.constraints;
        c.max_mtt_depth = cap;
        c.validate();
        const Frame padded = pad_to_multiple(frames[fi].frame, c.ctu_size);
        TrajectoryCollector collector(*policy, cfg.epsilon,
                                      derive_seed(cfg.seed, fi, uint64_t(qp), uint64_t(cap)), qp,
                                      cap, frames[fi].id);
        ExhaustiveSelector all_modes;
        encode_frame(padded, qp, c, all_modes, false, &collector);
        all.insert(all.end(), std::make_move_iterator(collector.out.begin()),
                   std::make_move_iterator(collector.out.end()));
      }
    }
  }
  return all;
}

}  // namespace qtmtt
