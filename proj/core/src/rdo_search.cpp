#include "qtmtt/rdo_search.hpp"

#include <chrono>
#include <string>
#include <utility>

#include "qtmtt/errors.hpp"

namespace qtmtt {

RdStats& RdStats::operator+=(const RdStats& o) {
  cu_reconstructions += o.cu_reconstructions;
  pixel_reconstructions += o.pixel_reconstructions;
  work_units += o.work_units;
  wall_seconds += o.wall_seconds;
  return *this;
}

SplitModeSet FixedSelector::select(const SelectorContext& ctx) const {
  SplitModeSet s = modes_.intersect(ctx.legal);
  if (s.empty()) s.insert(SplitMode::NS);
  return s;
}

SplitModeSet DepthCapSelector::select(const SelectorContext& ctx) const {
  SplitModeSet s = ctx.legal;
  if (ctx.cu.qt_depth >= qt_cap_) s.erase(SplitMode::QT);
  if (ctx.cu.mtt_depth >= mtt_cap_) {
    s.erase(SplitMode::BTH);
    s.erase(SplitMode::BTV);
    s.erase(SplitMode::TTH);
    s.erase(SplitMode::TTV);
  }
  return s;
}

namespace {

struct SearchEnv {
  const Frame& f;
  int qp;
  const PartitionConstraints& c;
  const SplitSelector& selector;
  ReconState& rs;
  Point origin;
  SearchObserver* obs;
  RdStats& stats;
};

struct NodeOutcome {
  PartitionTree tree;
  StateVector state{};
  double rate_bits = 0.0;
};

NodeOutcome search_node(SearchEnv& env, const CuRect& cu, const SplitSeries& path,
                        const LeafCost* parent_ns, int parent_area) {
  // NS is evaluated first at every node: its cost feeds the state vector and
  // it is a real reconstruction, so it always counts.
  LeafEval ns = leaf_rd_cost(env.f, cu, env.qp, env.rs, env.origin);
  env.stats.add_leaf(cu.width, cu.height);

  FeatureContext fctx;
  fctx.frame = &env.f;
  fctx.recon = &env.rs;
  fctx.constraints = &env.c;
  fctx.cu = cu;
  fctx.ctu_origin = env.origin;
  fctx.qp = env.qp;
  fctx.current_ns = ns.cost;
  if (parent_ns) {
    fctx.has_parent = true;
    fctx.parent_ns = *parent_ns;
    fctx.parent_area = parent_area;
  }
  const StateVector state = extract_state(fctx);

  const SplitModeSet legal = legal_splits(cu, env.c);
  SplitModeSet tried{SplitMode::NS};
  if (legal.size() > 1) {
    tried = env.selector.select(SelectorContext{cu, state, legal, env.qp}).intersect(legal);
    tried.insert(SplitMode::NS);
  }

  const int ax = env.origin.x + cu.x;
  const int ay = env.origin.y + cu.y;
  const bool record = env.obs && env.obs->wants_node(cu);
  NodeRecord rec;
  if (record) {
    rec.cu = cu;
    rec.ctu_origin = env.origin;
    rec.qp = env.qp;
    rec.state = state;
    rec.legal = legal;
    rec.ns = ns.cost;
    rec.candidates.push_back(NodeCandidate{SplitMode::NS, ns.cost.cost, 0.0, {}});
  }

  // Commit NS as the initial best, then let split candidates overwrite the
  // region speculatively.  Because prediction and features only ever read
  // above/left of a node, data a candidate left behind is always rewritten
  // before anything can read it.
  env.rs.commit_leaf(ax, ay, ns.recon, ns.cost, cu.qt_depth, path);
  PartitionTree best{cu, SplitMode::NS, ns.cost.cost, {}};
  double best_rate = ns.cost.rate;
  ReconState::Snapshot best_snap = env.rs.save_region(ax, ay, cu.width, cu.height);

  for (SplitMode m : tried.to_vector()) {
    if (m == SplitMode::NS) continue;
    const double signal = split_signal_cost(cu, m, legal, env.qp);
    const SplitSeries child_path = series_push(path, m);
    PartitionTree cand{cu, m, signal, {}};
    double cand_rate = split_signal_bits(legal);
    NodeCandidate cand_rec{m, 0.0, signal, {}};
    for (const CuRect& ch : split_children(cu, m)) {
      NodeOutcome sub = search_node(env, ch, child_path, &ns.cost, cu.area());
      cand.node_cost += sub.tree.node_cost;
      cand_rate += sub.rate_bits;
      if (record) cand_rec.children.push_back(NodeChildRecord{sub.state, sub.tree.node_cost});
      cand.children.push_back(std::move(sub.tree));
    }
    if (record) {
      cand_rec.cost = cand.node_cost;
      rec.candidates.push_back(std::move(cand_rec));
    }
    if (cand.node_cost < best.node_cost) {  // strict: ties keep the lower mode index
      best = std::move(cand);
      best_rate = cand_rate;
      best_snap = env.rs.save_region(ax, ay, cu.width, cu.height);
    }
  }
  env.rs.restore_region(best_snap);

  if (record) {
    rec.chosen = best.chosen;
    env.obs->on_node(rec);
  }
  return NodeOutcome{std::move(best), state, best_rate};
}

}  // namespace

SearchResult search(const Frame& f, const CuRect& ctu, int qp, const PartitionConstraints& c,
                    const SplitSelector& selector, ReconState& rs, Point ctu_origin,
                    SearchObserver* observer) {
  c.validate();
  if (ctu.width != c.ctu_size || ctu.height != c.ctu_size || ctu.qt_depth != 0 ||
      ctu.mtt_depth != 0 || ctu.in_mtt_region)
    throw ConfigError("search expects an undivided CTU-sized root");
  const int ax = ctu_origin.x + ctu.x;
  const int ay = ctu_origin.y + ctu.y;
  if (ax < 0 || ay < 0 || ax + ctu.width > f.width() || ay + ctu.height > f.height())
    throw ConfigError("CTU rectangle outside the frame");
  if (rs.width() != f.width() || rs.height() != f.height())
    throw ConfigError("ReconState dimensions do not match the frame");

  const auto t0 = std::chrono::steady_clock::now();
  RdStats stats;
  SearchEnv env{f, qp, c, selector, rs, ctu_origin, observer, stats};
  NodeOutcome out = search_node(env, ctu, SplitSeries{}, nullptr, 0);
  stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return SearchResult{std::move(out.tree), stats, out.rate_bits};
}

SearchResult search_exhaustive(const Frame& f, const CuRect& ctu, int qp,
                               const PartitionConstraints& c, ReconState& rs, Point ctu_origin,
                               SearchObserver* observer) {
  ExhaustiveSelector all;
  return search(f, ctu, qp, c, all, rs, ctu_origin, observer);
}

bool compare_trees(const PartitionTree& a, const PartitionTree& b) {
  if (a.node != b.node || a.chosen != b.chosen || a.children.size() != b.children.size())
    return false;
  for (size_t i = 0; i < a.children.size(); ++i)
    if (!compare_trees(a.children[i], b.children[i])) return false;
  return true;
}

}  // namespace qtmtt
