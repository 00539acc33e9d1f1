#include "qtmtt/rd_engine.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <string>

#include "qtmtt/errors.hpp"

namespace qtmtt {

double lambda_of_qp(int qp) {
  if (qp < 0 || qp > 51) throw ConfigError("qp must be in [0,51], got " + std::to_string(qp));
  return 0.57 * std::exp2((qp - 12) / 3.0);
}

double qstep_of_qp(int qp) {
  if (qp < 0 || qp > 51) throw ConfigError("qp must be in [0,51], got " + std::to_string(qp));
  return std::exp2((qp - 4) / 6.0);
}

namespace {

inline constexpr int kMaxTransformSide = 128;

// Orthonormal DCT-II basis, row-major [k][i], for power-of-two sizes.
const std::vector<double>& dct_basis(int n) {
  static const std::array<std::vector<double>, 8> tables = [] {
    std::array<std::vector<double>, 8> t;
    for (int p = 0; p < 8; ++p) {
      const int n = 1 << p;
      auto& m = t[p];
      m.resize(size_t(n) * n);
      const double pi = std::acos(-1.0);
      for (int k = 0; k < n; ++k) {
        const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / n);
        for (int i = 0; i < n; ++i) m[size_t(k) * n + i] = scale * std::cos(pi * (2 * i + 1) * k / (2.0 * n));
      }
    }
    return t;
  }();
  if (n <= 0 || n > kMaxTransformSide || (n & (n - 1)) != 0)
    throw ConfigError("transform size must be a power of two in [1,128], got " + std::to_string(n));
  return tables[std::countr_zero(unsigned(n))];
}

}  // namespace

Grid<double> forward_dct(const Grid<int16_t>& residual) {
  const int w = residual.width(), h = residual.height();
  const auto& cw = dct_basis(w);
  const auto& ch = dct_basis(h);
  // rows: tmp[y][v] = sum_x R[y][x] * Cw[v][x]
  Grid<double> tmp(w, h);
  for (int y = 0; y < h; ++y) {
    const int16_t* r = residual.row(y);
    for (int v = 0; v < w; ++v) {
      const double* basis = cw.data() + size_t(v) * w;
      double acc = 0.0;
      for (int x = 0; x < w; ++x) acc += basis[x] * r[x];
      tmp.at(v, y) = acc;
    }
  }
  // columns: out[u][v] = sum_y Ch[u][y] * tmp[y][v]
  Grid<double> out(w, h);
  for (int u = 0; u < h; ++u) {
    const double* basis = ch.data() + size_t(u) * h;
    for (int v = 0; v < w; ++v) {
      double acc = 0.0;
      for (int y = 0; y < h; ++y) acc += basis[y] * tmp.at(v, y);
      out.at(v, u) = acc;
    }
  }
  return out;
}

Grid<int16_t> inverse_dct(const Grid<double>& coeff) {
  const int w = coeff.width(), h = coeff.height();
  const auto& cw = dct_basis(w);
  const auto& ch = dct_basis(h);
  // columns first: tmp[y][v] = sum_u Ch[u][y] * X[u][v]
  Grid<double> tmp(w, h);
  for (int y = 0; y < h; ++y) {
    for (int v = 0; v < w; ++v) {
      double acc = 0.0;
      for (int u = 0; u < h; ++u) acc += ch[size_t(u) * h + y] * coeff.at(v, u);
      tmp.at(v, y) = acc;
    }
  }
  Grid<int16_t> out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int v = 0; v < w; ++v) acc += cw[size_t(v) * w + x] * tmp.at(v, y);
      out.at(x, y) = int16_t(std::llround(acc));
    }
  }
  return out;
}

Grid<int32_t> quantize(const Grid<double>& coeff, int qp) {
  const double qstep = qstep_of_qp(qp);
  Grid<int32_t> q(coeff.width(), coeff.height());
  for (int y = 0; y < coeff.height(); ++y)
    for (int x = 0; x < coeff.width(); ++x) q.at(x, y) = int32_t(std::llround(coeff.at(x, y) / qstep));
  return q;
}

Grid<double> dequantize(const Grid<int32_t>& qcoeff, int qp) {
  const double qstep = qstep_of_qp(qp);
  Grid<double> c(qcoeff.width(), qcoeff.height());
  for (int y = 0; y < qcoeff.height(); ++y)
    for (int x = 0; x < qcoeff.width(); ++x) c.at(x, y) = qcoeff.at(x, y) * qstep;
  return c;
}

TransformOutcome transform_quantize(const Grid<int16_t>& residual, int qp) {
  TransformOutcome out;
  out.qcoeff = quantize(forward_dct(residual), qp);
  out.residual_recon = inverse_dct(dequantize(out.qcoeff, qp));
  return out;
}

double coeff_rate_bits(const Grid<int32_t>& qcoeff) {
  double bits = kNsFlagBits;
  for (int y = 0; y < qcoeff.height(); ++y) {
    const int32_t* row = qcoeff.row(y);
    for (int x = 0; x < qcoeff.width(); ++x) {
      const int32_t c = row[x];
      bits += c == 0 ? 0.5 : 1.0 + 2.0 * std::log2(1.0 + std::abs(double(c)));
    }
  }
  return bits;
}

ReconState::ReconState(int width, int height)
    : recon(width, height),
      covered(width, height),
      leaf_cost(width, height),
      leaf_area(width, height),
      leaf_qt_depth(width, height),
      leaf_series(width, height) {}

namespace {

template <typename T>
void copy_out(const Grid<T>& src, int x, int y, int w, int h, std::vector<T>& dst) {
  dst.resize(size_t(w) * h);
  for (int j = 0; j < h; ++j) {
    const T* row = src.row(y + j) + x;
    std::copy(row, row + w, dst.begin() + size_t(j) * w);
  }
}

template <typename T>
void copy_in(Grid<T>& dst, int x, int y, int w, int h, const std::vector<T>& src) {
  for (int j = 0; j < h; ++j) {
    std::copy(src.begin() + size_t(j) * w, src.begin() + size_t(j + 1) * w, dst.row(y + j) + x);
  }
}

}  // namespace

ReconState::Snapshot ReconState::save_region(int x, int y, int w, int h) const {
  Snapshot s;
  s.x = x;
  s.y = y;
  s.width = w;
  s.height = h;
  copy_out(recon, x, y, w, h, s.recon);
  copy_out(covered, x, y, w, h, s.covered);
  copy_out(leaf_cost, x, y, w, h, s.cost);
  copy_out(leaf_area, x, y, w, h, s.area);
  copy_out(leaf_qt_depth, x, y, w, h, s.qt_depth);
  copy_out(leaf_series, x, y, w, h, s.series);
  return s;
}

void ReconState::restore_region(const Snapshot& s) {
  copy_in(recon, s.x, s.y, s.width, s.height, s.recon);
  copy_in(covered, s.x, s.y, s.width, s.height, s.covered);
  copy_in(leaf_cost, s.x, s.y, s.width, s.height, s.cost);
  copy_in(leaf_area, s.x, s.y, s.width, s.height, s.area);
  copy_in(leaf_qt_depth, s.x, s.y, s.width, s.height, s.qt_depth);
  copy_in(leaf_series, s.x, s.y, s.width, s.height, s.series);
}

void ReconState::commit_leaf(int x, int y, const Grid<uint8_t>& block, const LeafCost& lc,
                             int qt_depth, const SplitSeries& path) {
  const int w = block.width(), h = block.height();
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      recon.at(x + i, y + j) = block.at(i, j);
      covered.at(x + i, y + j) = 1;
      leaf_cost.at(x + i, y + j) = lc.cost;
      leaf_area.at(x + i, y + j) = w * h;
      leaf_qt_depth.at(x + i, y + j) = uint8_t(qt_depth);
      leaf_series.at(x + i, y + j) = path;
    }
  }
}

Grid<uint8_t> predict_intra(const Frame&, const CuRect& cu, const ReconState& rs,
                            Point ctu_origin) {
  const int ax = ctu_origin.x + cu.x;
  const int ay = ctu_origin.y + cu.y;
  int64_t sum = 0;
  int count = 0;
  if (ay > 0) {
    for (int i = 0; i < cu.width; ++i) {
      if (rs.covered.at(ax + i, ay - 1)) {
        sum += rs.recon.at(ax + i, ay - 1);
        ++count;
      }
    }
  }
  if (ax > 0) {
    for (int j = 0; j < cu.height; ++j) {
      if (rs.covered.at(ax - 1, ay + j)) {
        sum += rs.recon.at(ax - 1, ay + j);
        ++count;
      }
    }
  }
  const uint8_t dc = count == 0 ? uint8_t(128) : uint8_t(std::llround(double(sum) / count));
  return Grid<uint8_t>(cu.width, cu.height, dc);
}

LeafEval leaf_rd_cost(const Frame& f, const CuRect& cu, int qp, const ReconState& rs,
                      Point ctu_origin) {
  const int ax = ctu_origin.x + cu.x;
  const int ay = ctu_origin.y + cu.y;
  Grid<uint8_t> pred = predict_intra(f, cu, rs, ctu_origin);

  Grid<int16_t> residual(cu.width, cu.height);
  for (int j = 0; j < cu.height; ++j)
    for (int i = 0; i < cu.width; ++i)
      residual.at(i, j) = int16_t(int(f.luma.at(ax + i, ay + j)) - int(pred.at(i, j)));

  TransformOutcome tq = transform_quantize(residual, qp);

  LeafEval out;
  out.recon = Grid<uint8_t>(cu.width, cu.height);
  uint64_t sse = 0;
  for (int j = 0; j < cu.height; ++j) {
    for (int i = 0; i < cu.width; ++i) {
      const int v = std::clamp(int(pred.at(i, j)) + int(tq.residual_recon.at(i, j)), 0, 255);
      out.recon.at(i, j) = uint8_t(v);
      const int d = int(f.luma.at(ax + i, ay + j)) - v;
      sse += uint64_t(d * d);
    }
  }
  out.cost.distortion = double(sse);
  out.cost.rate = coeff_rate_bits(tq.qcoeff);
  out.cost.cost = out.cost.distortion + lambda_of_qp(qp) * out.cost.rate;
  return out;
}

double split_signal_bits(const SplitModeSet& legal) {
  const int n = legal.size();
  if (n <= 1) return 0.0;
  return double(std::bit_width(unsigned(n - 1)));  // ceil(log2 n)
}

double split_signal_cost(const CuRect& cu, SplitMode mode, const SplitModeSet& legal, int qp) {
  (void)cu;
  if (!legal.contains(mode)) throw ConfigError("split_signal_cost: mode not in the legal set");
  return lambda_of_qp(qp) * split_signal_bits(legal);
}

}  // namespace qtmtt
