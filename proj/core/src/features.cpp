#include "qtmtt/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qtmtt/errors.hpp"

namespace qtmtt {

namespace {

int series_code(SplitMode m) { return index_of(m) + 1; }

NcuHvPair pair_of_code(int code) {
  switch (code) {
    case 2: return {1.0, 0.0};    // QT
    case 3: return {0.5, +1.0};   // BTH
    case 4: return {0.5, -1.0};   // BTV
    case 5: return {0.75, +1.0};  // TTH
    case 6: return {0.75, -1.0};  // TTV
    default: break;
  }
  if (code == 1) throw ConfigError("split series holds an NS segment");
  throw ConfigError("split series segment code out of range: " + std::to_string(code));
}

double clamp_cost(double v) { return std::clamp(v, 0.0, kCostFeatureClamp); }

}  // namespace

SplitSeries series_push(const SplitSeries& s, SplitMode m) {
  if (m == SplitMode::NS) throw ConfigError("NS cannot appear inside a split series");
  if (s.length >= kSeriesCapacity) throw ConfigError("split series longer than 12 segments");
  SplitSeries out = s;
  out.packed |= uint64_t(series_code(m)) << (5 * out.length);
  out.length += 1;
  return out;
}

SplitSeries encode_split_series(const std::vector<SplitMode>& path) {
  SplitSeries s;
  for (SplitMode m : path) s = series_push(s, m);
  return s;
}

std::array<NcuHvPair, kSeriesMaxSegments> decode_split_series(const SplitSeries& s) {
  if (s.length < 0 || s.length > kSeriesCapacity) throw ConfigError("split series length out of range");
  std::array<NcuHvPair, kSeriesMaxSegments> out{};
  const int used = std::min(s.length, kSeriesMaxSegments);  // keep the root-most segments
  for (int i = 0; i < used; ++i) {
    const int code = int((s.packed >> (5 * i)) & 0x1f);
    if (code == 0) throw ConfigError("split series has a zero segment inside its length");
    out[i] = pair_of_code(code);
  }
  for (int i = s.length; i < kSeriesCapacity; ++i) {
    if ((s.packed >> (5 * i)) & 0x1f) throw ConfigError("split series has segments beyond its length");
  }
  return out;
}

std::array<double, kHogBins> hog(const Grid<uint8_t>& plane, int x, int y, int w, int h) {
  std::array<double, kHogBins> bins{};
  const double pi = std::acos(-1.0);
  const double bin_width = pi / kHogBins;
  for (int j = 1; j < h - 1; ++j) {
    for (int i = 1; i < w - 1; ++i) {
      const int gx = int(plane.at(x + i + 1, y + j)) - int(plane.at(x + i - 1, y + j));
      const int gy = int(plane.at(x + i, y + j + 1)) - int(plane.at(x + i, y + j - 1));
      if (gx == 0 && gy == 0) continue;
      const double mag = std::sqrt(double(gx) * gx + double(gy) * gy);
      double theta = std::atan2(double(gy), double(gx));
      if (theta < 0) theta += pi;    // unsigned orientation
      if (theta >= pi) theta -= pi;  // atan2 can return exactly pi
      // Soft vote between the two bin centers bracketing theta (centers at
      // k*pi/8, circular so angles near pi wrap onto bin 0).
      const double pos = theta / bin_width;
      int lo = int(pos);
      if (lo >= kHogBins) lo = kHogBins - 1;
      const double frac = pos - lo;
      bins[lo] += (1.0 - frac) * mag;
      bins[(lo + 1) % kHogBins] += frac * mag;
    }
  }
  double total = 0.0;
  for (double b : bins) total += b;
  if (total > 0.0)
    for (double& b : bins) b /= total;
  return bins;
}

std::array<double, kHogBins> hog(const Grid<uint8_t>& block) {
  return hog(block, 0, 0, block.width(), block.height());
}

StateVector extract_state(const FeatureContext& ctx) {
  if (!ctx.frame || !ctx.recon || !ctx.constraints)
    throw ConfigError("extract_state: incomplete context");
  const Frame& f = *ctx.frame;
  const ReconState& rs = *ctx.recon;
  const double lambda = lambda_of_qp(ctx.qp);
  const int max_qt = ctx.constraints->max_qt_depth;
  const int ax = ctx.ctu_origin.x + ctx.cu.x;
  const int ay = ctx.ctu_origin.y + ctx.cu.y;

  StateVector s{};

  // Neighbor lookup at the sample just above / left of the top-left corner.
  auto neighbor = [&](int px, int py, int cost_slot, int depth_slot, int avail_slot,
                      int series_base) {
    const bool avail = px >= 0 && py >= 0 && px < rs.width() && py < rs.height() &&
                       rs.covered.at(px, py) != 0;
    s[avail_slot] = avail ? 1.0 : 0.0;
    if (!avail) return;
    const double area = double(rs.leaf_area.at(px, py));
    s[cost_slot] = clamp_cost(rs.leaf_cost.at(px, py) / (lambda * area));
    s[depth_slot] = max_qt > 0 ? double(rs.leaf_qt_depth.at(px, py)) / max_qt : 0.0;
    const auto pairs = decode_split_series(rs.leaf_series.at(px, py));
    for (int i = 0; i < kSeriesMaxSegments; ++i) {
      s[series_base + 2 * i] = pairs[i].n_cu_norm;
      s[series_base + 2 * i + 1] = pairs[i].hv;
    }
  };
  neighbor(ax, ay - 1, 0, 2, 4, 6);                           // top
  neighbor(ax - 1, ay, 1, 3, 5, 6 + 2 * kSeriesMaxSegments);  // left

  // Parent NS measurements.
  const int pi_base = 6 + 4 * kSeriesMaxSegments;
  if (ctx.has_parent && ctx.parent_area > 0) {
    const double la = lambda * ctx.parent_area;
    s[pi_base + 0] = clamp_cost(ctx.parent_ns.cost / la);
    s[pi_base + 1] = clamp_cost(ctx.parent_ns.rate / la);
    s[pi_base + 2] = clamp_cost(ctx.parent_ns.distortion / ctx.parent_area);
  }

  // Block scalars.
  const int bi_base = pi_base + 3;
  s[bi_base + 0] = std::log2(double(ctx.cu.width)) / 7.0;
  s[bi_base + 1] = std::log2(double(ctx.cu.height)) / 7.0;
  s[bi_base + 2] = ctx.qp / 51.0;
  s[bi_base + 3] = clamp_cost(ctx.current_ns.cost / (lambda * ctx.cu.area()));

  // Source-texture histogram.
  const auto bins = hog(f.luma, ax, ay, ctx.cu.width, ctx.cu.height);
  const int hog_base = bi_base + 4;
  for (int i = 0; i < kHogBins; ++i) s[hog_base + i] = bins[i];

  return s;
}

}  // namespace qtmtt
