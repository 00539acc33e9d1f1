#pragma once

#include <cstdint>
#include <vector>

#include "qtmtt/features.hpp"
#include "qtmtt/frame.hpp"
#include "qtmtt/partition.hpp"
#include "qtmtt/rd_engine.hpp"

namespace qtmtt {

// Deterministic effort model: one leaf evaluation of a w x h block costs
// w*h*(w+h) work units (separable-transform arithmetic), and modeled time
// converts at a fixed rate so timing-based reports are reproducible.
inline constexpr double kModeledWorkPerSecond = 1.0e9;

struct RdStats {
  uint64_t cu_reconstructions = 0;
  uint64_t pixel_reconstructions = 0;
  uint64_t work_units = 0;
  double wall_seconds = 0.0;  // measured; never used in reproducible reports

  void add_leaf(int w, int h) {
    cu_reconstructions += 1;
    pixel_reconstructions += uint64_t(w) * h;
    work_units += uint64_t(w) * h * (uint64_t(w) + h);
  }
  double modeled_seconds() const { return double(work_units) / kModeledWorkPerSecond; }
  RdStats& operator+=(const RdStats& o);
};

struct SelectorContext {
  CuRect cu;
  StateVector state{};
  SplitModeSet legal;
  int qp = 32;
};

// Chooses which of the legal modes the search evaluates at a node.  Must
// return a non-empty subset of ctx.legal; deterministic for a fixed
// model/seed.
class SplitSelector {
 public:
  virtual ~SplitSelector() = default;
  virtual SplitModeSet select(const SelectorContext& ctx) const = 0;
};

// Evaluates everything legal (the anchor configuration).
class ExhaustiveSelector final : public SplitSelector {
 public:
  SplitModeSet select(const SelectorContext& ctx) const override { return ctx.legal; }
};

// Intersects a fixed mode set with the legal set (NS when empty).
class FixedSelector final : public SplitSelector {
 public:
  explicit FixedSelector(SplitModeSet modes) : modes_(modes) {}
  SplitModeSet select(const SelectorContext& ctx) const override;

 private:
  SplitModeSet modes_;
};

// Depth-capped heuristic: drops QT beyond qt_cap and BT/TT beyond mtt_cap.
class DepthCapSelector final : public SplitSelector {
 public:
  DepthCapSelector(int qt_cap, int mtt_cap) : qt_cap_(qt_cap), mtt_cap_(mtt_cap) {}
  SplitModeSet select(const SelectorContext& ctx) const override;

 private:
  int qt_cap_;
  int mtt_cap_;
};

// Search instrumentation hooks.  wants_node gates the (slightly costly)
// per-node record assembly; on_node fires after a node's winner is chosen.
struct NodeChildRecord {
  StateVector state{};
  double best_cost = 0.0;  // committed best cost of the child subtree
};
struct NodeCandidate {
  SplitMode mode = SplitMode::NS;
  double cost = 0.0;         // NS leaf cost, or sum of children + signal cost
  double signal_cost = 0.0;  // 0 for the NS candidate
  std::vector<NodeChildRecord> children;
};
struct NodeRecord {
  CuRect cu;
  Point ctu_origin;
  int qp = 32;
  StateVector state{};
  SplitModeSet legal;
  LeafCost ns;
  std::vector<NodeCandidate> candidates;  // ascending mode index; NS first
  SplitMode chosen = SplitMode::NS;
};
class SearchObserver {
 public:
  virtual ~SearchObserver() = default;
  virtual bool wants_node(const CuRect&) const { return false; }
  virtual void on_node(const NodeRecord&) {}
};

struct SearchResult {
  PartitionTree tree;
  RdStats stats;
  double rate_bits = 0.0;  // committed leaves' rate + committed split signaling bits
};

// Recursive RD search over one CTU.  Every node evaluates NS first (its cost
// feeds the state vector), asks the selector which splits to try, recurses on
// children sequentially in raster order against a speculative ReconState, and
// commits the cheapest candidate (ties broken by mode index order).  Counters
// include losing branches.
SearchResult search(const Frame& f, const CuRect& ctu, int qp, const PartitionConstraints& c,
                    const SplitSelector& selector, ReconState& rs, Point ctu_origin = {},
                    SearchObserver* observer = nullptr);

// search() with the all-legal selector: the complexity/quality anchor.
SearchResult search_exhaustive(const Frame& f, const CuRect& ctu, int qp,
                               const PartitionConstraints& c, ReconState& rs,
                               Point ctu_origin = {}, SearchObserver* observer = nullptr);

// Structural equality: geometry and chosen modes; recorded costs are ignored.
bool compare_trees(const PartitionTree& a, const PartitionTree& b);

}  // namespace qtmtt
