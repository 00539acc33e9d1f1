#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "qtmtt/errors.hpp"
#include "qtmtt/features.hpp"
#include "qtmtt/frame.hpp"
#include "qtmtt/partition.hpp"
#include "qtmtt/rd_engine.hpp"

using namespace qtmtt;

namespace {

const std::vector<SplitMode> kSplittingModes = {SplitMode::QT, SplitMode::BTH, SplitMode::BTV,
                                                SplitMode::TTH, SplitMode::TTV};

// Reference decode written against the published slot meanings only.
NcuHvPair expected_pair(SplitMode m) {
  switch (m) {
    case SplitMode::QT: return {1.0, 0.0};
    case SplitMode::BTH: return {0.5, +1.0};
    case SplitMode::BTV: return {0.5, -1.0};
    case SplitMode::TTH: return {0.75, +1.0};
    case SplitMode::TTV: return {0.75, -1.0};
    default: return {};
  }
}

Frame flat_frame(int w, int h, uint8_t v) {
  Frame f;
  f.luma = Grid<uint8_t>(w, h, v);
  return f;
}

}  // namespace

TEST_CASE("split series encoding packs five bits per depth, root first") {
  CHECK(encode_split_series({}) == SplitSeries{0, 0});
  CHECK(encode_split_series({SplitMode::QT}) == SplitSeries{2, 1});
  CHECK(encode_split_series({SplitMode::QT, SplitMode::BTH}) == SplitSeries{98, 2});
  CHECK(encode_split_series({SplitMode::TTV}) == SplitSeries{6, 1});

  const SplitSeries s = series_push(series_push(SplitSeries{}, SplitMode::QT), SplitMode::BTH);
  CHECK(s == SplitSeries{98, 2});
}

TEST_CASE("series never stores a leaf decision") {
  CHECK_THROWS_AS(encode_split_series({SplitMode::NS}), ConfigError);
  CHECK_THROWS_AS(series_push(SplitSeries{2, 1}, SplitMode::NS), ConfigError);
  // a stored NS code is rejected on the way out too
  CHECK_THROWS_AS(decode_split_series(SplitSeries{1, 1}), ConfigError);
}

TEST_CASE("series decode validates every segment") {
  CHECK_THROWS_AS(decode_split_series(SplitSeries{7, 1}), ConfigError);   // code > 6
  CHECK_THROWS_AS(decode_split_series(SplitSeries{31, 1}), ConfigError);  // all-ones segment
  CHECK_THROWS_AS(decode_split_series(SplitSeries{0, 2}), ConfigError);   // zero inside length
  // live bits beyond the declared length
  CHECK_THROWS_AS(decode_split_series(SplitSeries{2 | (3u << 5) | (4u << 10), 2}), ConfigError);
  CHECK_THROWS_AS(decode_split_series(SplitSeries{0, 13}), ConfigError);  // over capacity
  CHECK_THROWS_AS(decode_split_series(SplitSeries{0, -1}), ConfigError);
}

TEST_CASE("series round-trips every path up to depth four") {
  // depth-first walk over all 5^k mode sequences, k <= 4
  std::vector<SplitMode> path;
  std::function<void()> walk = [&] {
    const SplitSeries s = encode_split_series(path);
    CHECK(int(path.size()) == s.length);
    const auto pairs = decode_split_series(s);
    for (size_t i = 0; i < path.size(); ++i) {
      CHECK(pairs[i] == expected_pair(path[i]));
    }
    for (size_t i = path.size(); i < size_t(kSeriesMaxSegments); ++i)
      CHECK(pairs[i] == NcuHvPair{});
    if (path.size() == 4) return;
    for (SplitMode m : kSplittingModes) {
      path.push_back(m);
      walk();
      path.pop_back();
    }
  };
  walk();
}

TEST_CASE("decode keeps the root-most segments of an over-deep series") {
  std::vector<SplitMode> p;
  for (int i = 0; i < 12; ++i) p.push_back(kSplittingModes[i % 5]);
  const SplitSeries s = encode_split_series(p);
  CHECK(s.length == 12);
  CHECK_THROWS_AS(series_push(s, SplitMode::BTH), ConfigError);  // capacity is 12

  const auto pairs = decode_split_series(s);
  for (int i = 0; i < kSeriesMaxSegments; ++i) CHECK(pairs[i] == expected_pair(p[i]));
}

TEST_CASE("orientation histogram of a constant block is the zero vector") {
  const auto bins = hog(Grid<uint8_t>(16, 16, uint8_t(93)));
  for (double b : bins) CHECK(b == 0.0);
}

TEST_CASE("orientation histogram localizes axis-aligned and diagonal structure") {
  // vertical edge: all gradient energy is horizontal -> first bin
  Grid<uint8_t> vedge(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) vedge.at(x, y) = x < 4 ? 0 : 255;
  auto bins = hog(vedge);
  CHECK(bins[0] == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 1; i < kHogBins; ++i) CHECK(bins[i] == 0.0);

  // horizontal edge: gradients point straight down -> the pi/2 bin
  Grid<uint8_t> hedge(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) hedge.at(x, y) = y < 4 ? 0 : 255;
  bins = hog(hedge);
  CHECK(bins[kHogBins / 2] == doctest::Approx(1.0).epsilon(1e-9));

  // 45-degree ramp: gx == gy everywhere -> the pi/4 bin
  Grid<uint8_t> ramp(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) ramp.at(x, y) = uint8_t(10 * (x + y));
  bins = hog(ramp);
  CHECK(bins[kHogBins / 4] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("orientation histogram is L1-normalized whenever it is non-zero") {
  Grid<uint8_t> block(16, 16);
  uint32_t lcg = 12345;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      lcg = lcg * 1664525u + 1013904223u;
      block.at(x, y) = uint8_t(lcg >> 24);
    }
  const auto bins = hog(block);
  double total = 0.0;
  for (double b : bins) {
    CHECK(b >= 0.0);
    total += b;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("histogram votes split between the two bracketing bins") {
  // one interior sample with gradient direction atan2(20, 40) ~ 26.57 deg,
  // strictly between the bin centers at 22.5 deg and 45 deg
  Grid<uint8_t> block(3, 3, uint8_t(0));
  block.at(2, 1) = 40;  // gx = 40
  block.at(1, 2) = 20;  // gy = 20
  const auto bins = hog(block);
  CHECK(bins[1] > 0.0);
  CHECK(bins[2] > 0.0);
  CHECK(bins[1] + bins[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bins[1] > bins[2]);  // closer to the 22.5 deg center
}

TEST_CASE("state vector has the documented width and zero-filled missing context") {
  const Frame f = flat_frame(64, 64, 128);
  ReconState rs(64, 64);
  const PartitionConstraints c;

  FeatureContext ctx;
  ctx.frame = &f;
  ctx.recon = &rs;
  ctx.constraints = &c;
  ctx.cu = CuRect{0, 0, 64, 64, 0, 0, false};
  ctx.qp = 32;
  ctx.current_ns = leaf_rd_cost(f, ctx.cu, 32, rs).cost;

  const StateVector s = extract_state(ctx);
  CHECK(s.size() == 53);

  // no neighbors, no parent: everything before the block scalars is zero
  for (int i = 0; i < 41; ++i) CHECK(s[i] == 0.0);
  CHECK(s[41] == doctest::Approx(6.0 / 7.0));  // log2(64)/7
  CHECK(s[42] == doctest::Approx(6.0 / 7.0));
  CHECK(s[43] == doctest::Approx(32.0 / 51.0));
  // flat content: distortion-free, so the cost feature is rate/area
  CHECK(s[44] == doctest::Approx((1.0 + 0.5 * 4096) / 4096).epsilon(1e-9));
  for (int i = 45; i < 53; ++i) CHECK(s[i] == 0.0);  // constant texture
}

TEST_CASE("state vector reports committed neighbors through the planes") {
  const Frame f = flat_frame(64, 64, 128);
  const PartitionConstraints c;
  ReconState rs(64, 64);

  // commit a 16x16 leaf above the probe row and a 8x8 leaf to its left
  const SplitSeries top_path = encode_split_series({SplitMode::QT, SplitMode::BTH});
  rs.commit_leaf(16, 0, Grid<uint8_t>(16, 16, uint8_t(100)), LeafCost{0.0, 0.0, 512.0}, 2,
                 top_path);
  const SplitSeries left_path = encode_split_series({SplitMode::TTV});
  rs.commit_leaf(8, 16, Grid<uint8_t>(8, 8, uint8_t(50)), LeafCost{0.0, 0.0, 1e12}, 1, left_path);

  FeatureContext ctx;
  ctx.frame = &f;
  ctx.recon = &rs;
  ctx.constraints = &c;
  ctx.cu = CuRect{16, 16, 16, 16, 1, 0, false};
  ctx.qp = 27;
  ctx.current_ns = leaf_rd_cost(f, ctx.cu, 27, rs).cost;
  ctx.has_parent = true;
  ctx.parent_ns = LeafCost{1024.0, 100.0, 2048.0};
  ctx.parent_area = 32 * 32;

  const StateVector s = extract_state(ctx);
  const double lambda = lambda_of_qp(27);

  CHECK(s[4] == 1.0);  // top available
  CHECK(s[5] == 1.0);  // left available
  CHECK(s[0] == doctest::Approx(512.0 / (lambda * 256)));
  CHECK(s[1] == 4.0);                        // absurd neighbor cost clamps
  CHECK(s[2] == doctest::Approx(2.0 / 4));   // top qt depth over the cap
  CHECK(s[3] == doctest::Approx(1.0 / 4));

  // decoded top series: QT then BTH
  CHECK(s[6] == 1.0);
  CHECK(s[7] == 0.0);
  CHECK(s[8] == 0.5);
  CHECK(s[9] == 1.0);
  CHECK(s[10] == 0.0);  // remaining segments unused

  // decoded left series: TTV only
  CHECK(s[22] == 0.75);
  CHECK(s[23] == -1.0);
  CHECK(s[24] == 0.0);

  // parent slots: cost and rate against lambda*area, distortion per sample
  CHECK(s[38] == doctest::Approx(2048.0 / (lambda * 1024)));
  CHECK(s[39] == doctest::Approx(100.0 / (lambda * 1024)));
  CHECK(s[40] == doctest::Approx(1.0));

  CHECK(s[41] == doctest::Approx(4.0 / 7.0));  // 16-wide
  CHECK(s[43] == doctest::Approx(27.0 / 51.0));
}

TEST_CASE("state extraction is invariant to qp for zero-residual content") {
  // mid-grey matches the fallback predictor exactly, so rate and distortion
  // are the same at every qp and only the raw qp slot may move
  const Frame f = flat_frame(64, 64, 128);
  ReconState rs(64, 64);
  const PartitionConstraints c;

  auto state_at = [&](int qp) {
    FeatureContext ctx;
    ctx.frame = &f;
    ctx.recon = &rs;
    ctx.constraints = &c;
    ctx.cu = CuRect{0, 0, 64, 64, 0, 0, false};
    ctx.qp = qp;
    ctx.current_ns = leaf_rd_cost(f, ctx.cu, qp, rs).cost;
    return extract_state(ctx);
  };
  const StateVector a = state_at(22);
  const StateVector b = state_at(37);
  for (int i = 0; i < kStateDim; ++i) {
    if (i == 43) continue;  // the qp slot itself
    CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9));
  }
  CHECK(a[43] != b[43]);
}

TEST_CASE("state extraction refuses an incomplete context") {
  FeatureContext ctx;
  CHECK_THROWS_AS(extract_state(ctx), ConfigError);
}
