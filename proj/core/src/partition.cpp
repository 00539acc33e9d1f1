#include "qtmtt/partition.hpp"

#include <bit>
#include <string>
#include <unordered_map>

#include "qtmtt/errors.hpp"

namespace qtmtt {

const char* name_of(SplitMode m) {
  switch (m) {
    case SplitMode::NS: return "NS";
    case SplitMode::QT: return "QT";
    case SplitMode::BTH: return "BTH";
    case SplitMode::BTV: return "BTV";
    case SplitMode::TTH: return "TTH";
    case SplitMode::TTV: return "TTV";
  }
  return "?";
}

int child_count(SplitMode m) {
  switch (m) {
    case SplitMode::NS: return 0;
    case SplitMode::QT: return 4;
    case SplitMode::BTH:
    case SplitMode::BTV: return 2;
    case SplitMode::TTH:
    case SplitMode::TTV: return 3;
  }
  return 0;
}

int SplitModeSet::size() const { return std::popcount(bits_); }

std::vector<SplitMode> SplitModeSet::to_vector() const {
  std::vector<SplitMode> v;
  for (int i = 0; i < kNumSplitModes; ++i) {
    SplitMode m = static_cast<SplitMode>(i);
    if (contains(m)) v.push_back(m);
  }
  return v;
}

namespace {
bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }
}  // namespace

void PartitionConstraints::validate() const {
  if (!is_pow2(ctu_size)) throw ConfigError("ctu_size must be a power of two, got " + std::to_string(ctu_size));
  if (!is_pow2(min_cu_side)) throw ConfigError("min_cu_side must be a power of two, got " + std::to_string(min_cu_side));
  if (min_cu_side > ctu_size) throw ConfigError("min_cu_side exceeds ctu_size");
  if (max_qt_depth < 0 || max_mtt_depth < 0) throw ConfigError("depth limits must be non-negative");
  if (max_qt_depth + max_mtt_depth > kSeriesCapacity)
    throw ConfigError("max_qt_depth + max_mtt_depth exceeds the split-series capacity of " +
                      std::to_string(kSeriesCapacity));
  if (!is_pow2(max_tt_side)) throw ConfigError("max_tt_side must be a power of two, got " + std::to_string(max_tt_side));
}

int PartitionTree::leaf_count() const {
  if (children.empty()) return 1;
  int n = 0;
  for (const auto& c : children) n += c.leaf_count();
  return n;
}

int PartitionTree::node_count() const {
  int n = 1;
  for (const auto& c : children) n += c.node_count();
  return n;
}

SplitModeSet legal_splits(const CuRect& cu, const PartitionConstraints& c) {
  SplitModeSet s{SplitMode::NS};
  if (cu.width == cu.height && cu.width >= 2 * c.min_cu_side && cu.qt_depth < c.max_qt_depth &&
      !cu.in_mtt_region) {
    s.insert(SplitMode::QT);
  }
  if (cu.mtt_depth < c.max_mtt_depth) {
    if (cu.height >= 2 * c.min_cu_side) s.insert(SplitMode::BTH);
    if (cu.width >= 2 * c.min_cu_side) s.insert(SplitMode::BTV);
    bool tt_fits = cu.width <= c.max_tt_side && cu.height <= c.max_tt_side;
    if (tt_fits && cu.height >= 4 * c.min_cu_side) s.insert(SplitMode::TTH);
    if (tt_fits && cu.width >= 4 * c.min_cu_side) s.insert(SplitMode::TTV);
  }
  return s;
}

std::vector<CuRect> split_children(const CuRect& cu, SplitMode mode) {
  auto child = [&](int x, int y, int w, int h, bool mtt_split) {
    CuRect r = cu;
    r.x = x;
    r.y = y;
    r.width = w;
    r.height = h;
    if (mtt_split) {
      r.mtt_depth = cu.mtt_depth + 1;
      r.in_mtt_region = true;
    } else {
      r.qt_depth = cu.qt_depth + 1;
    }
    return r;
  };
  auto bad = [&](const char* why) {
    return ConfigError(std::string(name_of(mode)) + " cannot divide " + std::to_string(cu.width) +
                       "x" + std::to_string(cu.height) + ": " + why);
  };

  const int x = cu.x, y = cu.y, w = cu.width, h = cu.height;
  switch (mode) {
    case SplitMode::NS:
      throw ConfigError("NS has no children");
    case SplitMode::QT: {
      if (w % 2 || h % 2) throw bad("odd side");
      const int hw = w / 2, hh = h / 2;
      return {child(x, y, hw, hh, false), child(x + hw, y, hw, hh, false),
              child(x, y + hh, hw, hh, false), child(x + hw, y + hh, hw, hh, false)};
    }
    case SplitMode::BTH: {
      if (h % 2) throw bad("odd height");
      const int hh = h / 2;
      return {child(x, y, w, hh, true), child(x, y + hh, w, hh, true)};
    }
    case SplitMode::BTV: {
      if (w % 2) throw bad("odd width");
      const int hw = w / 2;
      return {child(x, y, hw, h, true), child(x + hw, y, hw, h, true)};
    }
    case SplitMode::TTH: {
      if (h % 4) throw bad("height not divisible by 4");
      const int q = h / 4;
      return {child(x, y, w, q, true), child(x, y + q, w, 2 * q, true),
              child(x, y + 3 * q, w, q, true)};
    }
    case SplitMode::TTV: {
      if (w % 4) throw bad("width not divisible by 4");
      const int q = w / 4;
      return {child(x, y, q, h, true), child(x + q, y, 2 * q, h, true),
              child(x + 3 * q, y, q, h, true)};
    }
  }
  throw ConfigError("unknown split mode");
}

namespace {

uint64_t census_key(const CuRect& cu) {
  return uint64_t(cu.width) | uint64_t(cu.height) << 14 | uint64_t(cu.qt_depth) << 28 |
         uint64_t(cu.mtt_depth) << 36 | uint64_t(cu.in_mtt_region) << 44;
}

CuCensus census_rec(const CuRect& cu, const PartitionConstraints& c, bool qt_only,
                    std::unordered_map<uint64_t, CuCensus>& memo) {
  const uint64_t key = census_key(cu);
  if (auto it = memo.find(key); it != memo.end()) return it->second;

  CuCensus total{1, uint64_t(cu.width) * cu.height};
  for (SplitMode m : legal_splits(cu, c).to_vector()) {
    if (m == SplitMode::NS) continue;
    if (qt_only && m != SplitMode::QT) continue;
    for (const CuRect& ch : split_children(cu, m)) {
      CuCensus sub = census_rec(ch, c, qt_only, memo);
      total.cu_count += sub.cu_count;
      total.pixel_count += sub.pixel_count;
    }
  }
  memo.emplace(key, total);
  return total;
}

}  // namespace

CuCensus enumerate_all_cus(int ctu_size, const PartitionConstraints& c, bool qt_only) {
  PartitionConstraints cc = c;
  cc.ctu_size = ctu_size;
  cc.validate();
  CuRect root{0, 0, ctu_size, ctu_size, 0, 0, false};
  std::unordered_map<uint64_t, CuCensus> memo;
  return census_rec(root, cc, qt_only, memo);
}

}  // namespace qtmtt
