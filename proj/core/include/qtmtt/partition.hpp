#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace qtmtt {

// Split decisions at a CU, in fixed index order.  The numeric order is load
// bearing: it is the action indexing of Q-vectors, the tie-break order of the
// search, and the code space of serialized split series.
enum class SplitMode : uint8_t {
  NS = 0,   // no split (leaf)
  QT = 1,   // quad split
  BTH = 2,  // binary horizontal (stacked halves)
  BTV = 3,  // binary vertical (side-by-side halves)
  TTH = 4,  // ternary horizontal, 1:2:1
  TTV = 5,  // ternary vertical, 1:2:1
};

inline constexpr int kNumSplitModes = 6;

constexpr int index_of(SplitMode m) { return static_cast<int>(m); }
const char* name_of(SplitMode m);
int child_count(SplitMode m);  // NS 0, QT 4, BT 2, TT 3

// Small value-type set of split modes.
class SplitModeSet {
 public:
  constexpr SplitModeSet() = default;
  constexpr SplitModeSet(std::initializer_list<SplitMode> modes) {
    for (SplitMode m : modes) insert(m);
  }

  constexpr void insert(SplitMode m) { bits_ |= uint8_t(1u << index_of(m)); }
  constexpr void erase(SplitMode m) { bits_ &= uint8_t(~(1u << index_of(m))); }
  constexpr bool contains(SplitMode m) const { return bits_ & (1u << index_of(m)); }
  constexpr bool empty() const { return bits_ == 0; }
  int size() const;

  SplitModeSet intersect(SplitModeSet other) const {
    SplitModeSet r;
    r.bits_ = bits_ & other.bits_;
    return r;
  }

  // Members in ascending index order.
  std::vector<SplitMode> to_vector() const;

  friend constexpr bool operator==(SplitModeSet, SplitModeSet) = default;

 private:
  uint8_t bits_ = 0;
};

// Packed per-depth split path from the CTU root to a CU: 5 bits per segment,
// root first, segment value = split-mode index + 1, zero = unused.  The
// encode/decode operations live in features.hpp.
inline constexpr int kSeriesCapacity = 12;  // 5-bit segments fitting 64 bits

struct SplitSeries {
  uint64_t packed = 0;
  int length = 0;
  friend bool operator==(const SplitSeries&, const SplitSeries&) = default;
};

// CU geometry plus tree-depth context.  x/y are offsets from the CTU origin.
// Invariants (checked by validate): positive power-of-two sides, coordinates
// inside the CTU and aligned with the sides, and in_mtt_region == (mtt_depth
// > 0) for any CU produced by actual splitting.
struct CuRect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
  int qt_depth = 0;
  int mtt_depth = 0;
  bool in_mtt_region = false;

  int area() const { return width * height; }
  friend bool operator==(const CuRect&, const CuRect&) = default;
};

// Rule-set for the partition search.
struct PartitionConstraints {
  int ctu_size = 64;
  int min_cu_side = 4;
  int max_qt_depth = 4;
  int max_mtt_depth = 3;
  int max_tt_side = 32;

  // Throws ConfigError on non-power-of-two sizes, inconsistent bounds, or a
  // combined depth budget beyond what a SplitSeries can record.
  void validate() const;
};

// Decision tree over one CTU.  children is empty iff chosen == NS.
struct PartitionTree {
  CuRect node;
  SplitMode chosen = SplitMode::NS;
  double node_cost = 0.0;  // best RD cost of the subtree rooted here
  std::vector<PartitionTree> children;

  int leaf_count() const;
  int node_count() const;
};

// Which splits the rules allow at `cu`.  NS is always a member.  This is a
// total function of the stated conditions; it does not validate `cu`.
SplitModeSet legal_splits(const CuRect& cu, const PartitionConstraints& c);

// Child rectangles in raster order (top first, then left to right).  Throws
// ConfigError for NS or for a geometry the mode cannot divide evenly.
std::vector<CuRect> split_children(const CuRect& cu, SplitMode mode);

struct CuCensus {
  uint64_t cu_count = 0;     // nodes an exhaustive recursion visits
  uint64_t pixel_count = 0;  // total pixels across those visits
};

// Size of the full recursive search space for one CTU: every node the
// exhaustive search would visit (a rect reached via different split orders
// counts each time), and the pixels those visits reconstruct.  qt_only
// restricts the rules to NS/QT.  Memoized; runs in microseconds.
CuCensus enumerate_all_cus(int ctu_size, const PartitionConstraints& c, bool qt_only = false);

}  // namespace qtmtt
