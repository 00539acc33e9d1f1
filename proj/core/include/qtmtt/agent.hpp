#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qtmtt/features.hpp"
#include "qtmtt/frame.hpp"
#include "qtmtt/partition.hpp"
#include "qtmtt/rdo_search.hpp"
#include "qtmtt/rng.hpp"

namespace qtmtt {

// Predicted normalized RD cost per split mode, indexed by SplitMode order.
// Lower is better.  Illegal modes are masked at selection time only.
using QVector = std::array<double, kNumSplitModes>;

// Trajectory roots are always 32x32 CUs; every cost in a trajectory (root
// ground truth, sub-CU ground truth, split-signaling delta) is divided by
// lambda(qp) * 32 * 32 so one scale spans all QPs.
inline constexpr int kTrajectoryRootSide = 32;
double trajectory_cost_scale(int qp);

// CU sizes the Q-network decides for; everything else searches exhaustively.
bool agent_supports(int width, int height);

struct SubRecord {
  StateVector state{};
  double gt_cost = 0.0;  // normalized best cost of the sub-CU's own subtree
  friend bool operator==(const SubRecord&, const SubRecord&) = default;
};

// One explored non-NS action at the trajectory root.
struct ActionRecord {
  SplitMode action = SplitMode::QT;
  double delta_split_cost = 0.0;  // normalized signaling cost at the root
  bool optimal = false;           // true when this action is the RD argmin
  std::vector<SubRecord> subs;    // one per child, raster order
  friend bool operator==(const ActionRecord&, const ActionRecord&) = default;
};

// Two-level training sample rooted at a 32x32 CU.
struct Trajectory {
  int qp = 32;
  int mtt_cap = 3;  // max_mtt_depth the collecting search ran with
  std::string frame_id;
  CuRect root;
  StateVector root_state{};
  // Ground-truth normalized cost per root action; absent = illegal there.
  std::array<std::optional<double>, kNumSplitModes> root_gt{};
  std::vector<ActionRecord> actions;
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

// Fully connected feedforward net, rectifier hidden layers, identity output.
// Parameters live in one flat array: per layer, the out x in weight matrix
// row-major, then the bias.  The production shape is 53-256-256-128-6.
class QNetwork {
 public:
  QNetwork() = default;

  // He-uniform initialization of the production shape.
  static QNetwork seeded(uint64_t seed);
  // Arbitrary shape (first dim must be kStateDim, last kNumSplitModes).
  static QNetwork with_dims(std::vector<int> dims, uint64_t seed);

  const std::vector<int>& dims() const { return dims_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  int layer_count() const { return int(dims_.size()) - 1; }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  size_t param_count() const { return params_.size(); }

  // Offset of layer l's weights / biases inside params().
  size_t weight_offset(int l) const;
  size_t bias_offset(int l) const;

  int64_t step = 0;  // optimizer steps taken; persisted so training resumes

 private:
  std::vector<int> dims_;
  std::vector<double> params_;
};

// Deterministic forward pass.  Throws ConfigError on dimension mismatch.
QVector q_values(const QNetwork& net, const StateVector& s);
// General forward (toy shapes in tests); output sized dims().back().
std::vector<double> forward(const QNetwork& net, std::span<const double> input);

// Ranks legal modes by ascending Q (ties by mode index), keeps the first
// min(N, |legal|), then drops kept modes whose normalized gap to the legal
// minimum exceeds T (no-op at T=1; argmin never dropped).  NS is always
// force-included.
SplitModeSet select_topN(const QVector& q, const SplitModeSet& legal, int n, double threshold);

struct LossWeights {
  double a1 = 1.0, a2 = 1.0, a3 = 1.0;
};

struct LossBreakdown {
  double mse1 = 0.0;  // root-action regression
  double mse2 = 0.0;  // sub-CU regression
  double mse3 = 0.0;  // parent = sum(children) + delta consistency
  double total = 0.0;
};

// Network outputs for one trajectory: root Q-vector plus one Q-vector per
// recorded sub-CU (nested like Trajectory::actions).
struct TrajectoryPredictions {
  QVector root{};
  std::vector<std::vector<QVector>> subs;
};
TrajectoryPredictions predict_trajectory(const QNetwork& net, const Trajectory& t);

// Composite loss for one trajectory.  A sub-CU's predicted cost is the
// minimum of its six outputs (Bellman-style); the same minimum feeds the
// level-2 consistency target together with delta_split_cost.
LossBreakdown composite_loss(const TrajectoryPredictions& pred, const Trajectory& t,
                             const LossWeights& w);

// Mean composite loss over the batch and its parameter gradient (same layout
// as net.params()).  The consistency term backpropagates through both the
// root prediction and the child predictions (min picks one child slot).
LossBreakdown loss_gradient(const QNetwork& net, std::span<const Trajectory> batch,
                            const LossWeights& w, std::vector<double>& grad);

struct TrainConfig {
  int epochs = 60;
  int batch_size = 256;
  double learning_rate = 0.002;
  double momentum = 0.9;
  double max_grad_norm = 5.0;  // 0 disables clipping
  double lr_decay = 0.5;       // multiplied into the rate every lr_decay_epochs
  int lr_decay_epochs = 20;
  LossWeights weights;
  uint64_t seed = 1;
  std::string checkpoint_dir;  // writes model_epochNNN.txt when non-empty
};
struct TrainStep {
  int64_t step = 0;
  LossBreakdown loss;
};
struct TrainResult {
  QNetwork net;
  std::vector<TrainStep> history;
};

// Mini-batch gradient descent with momentum over shuffled epochs.  Throws
// NumericError (with the failing step) if the loss goes non-finite.
TrainResult train(const std::vector<Trajectory>& dataset, QNetwork net, const TrainConfig& cfg);

// Self-describing text format; load(save(net)) is bit-exact.
void save_model(const QNetwork& net, const std::string& path);
QNetwork load_model(const std::string& path);

// Top-N/threshold policy selector.  Sizes outside the supported set fall back
// to the full legal set.
class AgentSelector final : public SplitSelector {
 public:
  AgentSelector(const QNetwork* net, int topn, double threshold);
  SplitModeSet select(const SelectorContext& ctx) const override;

 private:
  const QNetwork* net_;
  int topn_;
  double threshold_;
};

// Equal-N baseline: keeps a uniformly random subset of legal modes (plus NS)
// at exactly the sizes the agent decides for, so comparisons against
// AgentSelector measure ranking quality only.
class RandomSelector final : public SplitSelector {
 public:
  RandomSelector(uint64_t seed, int n);
  SplitModeSet select(const SelectorContext& ctx) const override;

 private:
  mutable std::mutex mu_;  // draws stay race-free under frame-parallel callers
  mutable Rng rng_;
  int n_;
};

struct NamedFrame {
  std::string id;
  Frame frame;
};

// Value description of a selector, shared by the CLI and the sweep grid.
struct SelectorSpec {
  enum class Kind { Exhaustive, DepthCap, Agent, Random };
  Kind kind = Kind::Exhaustive;
  int topn = 6;
  double threshold = 1.0;
  int qt_cap = 99;  // DepthCap only
  int mtt_cap = 99;
  uint64_t seed = 0;  // Random only
  std::string label;
};

// Builds the selector a spec describes.  Agent specs require a non-null net.
std::unique_ptr<SplitSelector> make_selector(const SelectorSpec& spec, const QNetwork* net);

struct CollectConfig {
  std::vector<int> qps = {22, 27, 32, 37};
  std::vector<int> mtt_caps = {4, 6};
  PartitionConstraints constraints;  // max_mtt_depth is overridden per cap
  double epsilon = 1.0;
  uint64_t seed = 1;
};

// Exhaustively encodes every frame at each (qp, mtt cap), and for every 32x32
// CU at mtt depth 0 records a Trajectory: ground-truth costs of all legal
// root actions, plus sub-CU states/costs for the actions picked by an
// epsilon-greedy rule over `policy` (argmin and RD-optimal always included).
// A null policy stands for a fresh seeded network.
std::vector<Trajectory> collect_trajectories(const std::vector<NamedFrame>& frames,
                                             const CollectConfig& cfg, const QNetwork* policy);

}  // namespace qtmtt
