#pragma once

#include <array>
#include <vector>

#include "qtmtt/frame.hpp"
#include "qtmtt/partition.hpp"
#include "qtmtt/rd_engine.hpp"

namespace qtmtt {

inline constexpr int kSeriesMaxSegments = 8;  // series segments kept in the state vector
inline constexpr int kHogBins = 8;
inline constexpr double kCostFeatureClamp = 4.0;

// Layout: 6 neighbor scalars, two decoded series (top, left), 3 parent
// scalars, 4 block scalars, then the orientation histogram.
inline constexpr int kStateDim = 6 + 2 * kSeriesMaxSegments * 2 + 3 + 4 + kHogBins;
static_assert(kStateDim == 53);

using StateVector = std::array<double, kStateDim>;

// Per-segment decode of a split series: child count / 4 and orientation.
struct NcuHvPair {
  double n_cu_norm = 0.0;  // 0 unused; QT 1.0, BT 0.5, TT 0.75
  double hv = 0.0;         // 0 none/QT, +1 horizontal, -1 vertical
  friend bool operator==(const NcuHvPair&, const NcuHvPair&) = default;
};

// Packs a root-first split path, 5 bits per depth, code = mode index + 1.
// Throws ConfigError if the path contains NS or exceeds kSeriesCapacity.
SplitSeries encode_split_series(const std::vector<SplitMode>& path);

// Appends one mode to an existing series (same rules as encode_split_series).
SplitSeries series_push(const SplitSeries& s, SplitMode m);

// Decodes the root-most kSeriesMaxSegments segments to (N_CU, HV) pairs;
// unused segments decode to (0,0).  Throws ConfigError on codes > 6 or a
// stored NS code.
std::array<NcuHvPair, kSeriesMaxSegments> decode_split_series(const SplitSeries& s);

// Magnitude-weighted histogram of unsigned gradient orientations over the
// w x h window at (x, y): central differences on interior samples, atan2
// folded to [0, pi), soft assignment between the two nearest of kHogBins
// bins, L1-normalized.  Constant blocks give the zero vector.
std::array<double, kHogBins> hog(const Grid<uint8_t>& plane, int x, int y, int w, int h);
std::array<double, kHogBins> hog(const Grid<uint8_t>& block);

// Everything extract_state reads.  NS costs of the current CU and its parent
// must already be evaluated (the search guarantees the ordering).
struct FeatureContext {
  const Frame* frame = nullptr;
  const ReconState* recon = nullptr;
  const PartitionConstraints* constraints = nullptr;
  CuRect cu;
  Point ctu_origin;
  int qp = 32;
  LeafCost current_ns;
  bool has_parent = false;
  LeafCost parent_ns;
  int parent_area = 0;
};

// Fixed-dimension CU descriptor.  Cost-like entries are cost/(lambda * area)
// clamped to kCostFeatureClamp; sides are log2(side)/7; qp is qp/51; missing
// neighbors leave zeros with availability flag 0.
StateVector extract_state(const FeatureContext& ctx);

}  // namespace qtmtt
