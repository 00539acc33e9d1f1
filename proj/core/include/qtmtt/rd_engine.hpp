#pragma once

#include <cstdint>
#include <vector>

#include "qtmtt/frame.hpp"
#include "qtmtt/partition.hpp"

namespace qtmtt {

// Lagrange multiplier 0.57 * 2^((qp-12)/3).  Throws ConfigError outside [0,51].
double lambda_of_qp(int qp);

// Quantizer step 2^((qp-4)/6).
double qstep_of_qp(int qp);

// Flat per-leaf charge for signaling "no further split" (part of the leaf rate).
inline constexpr double kNsFlagBits = 1.0;

struct LeafCost {
  double distortion = 0.0;  // SSE, sample^2 units
  double rate = 0.0;        // estimated bits
  double cost = 0.0;        // distortion + lambda * rate
};

// Evolving reconstruction state of a frame.  `covered` marks samples whose CU
// was committed earlier in Z-scan order; the leaf_* planes record, for each
// covered sample, the committed leaf that produced it (neighbor features read
// them back).
class ReconState {
 public:
  ReconState() = default;
  ReconState(int width, int height);

  int width() const { return recon.width(); }
  int height() const { return recon.height(); }

  Grid<uint8_t> recon;
  Grid<uint8_t> covered;
  Grid<double> leaf_cost;       // absolute NS cost of the committed leaf
  Grid<int32_t> leaf_area;
  Grid<uint8_t> leaf_qt_depth;
  Grid<SplitSeries> leaf_series;

  // Copies of a rectangular window of every plane, for speculative search.
  struct Snapshot {
    int x = 0, y = 0, width = 0, height = 0;
    std::vector<uint8_t> recon, covered, qt_depth;
    std::vector<double> cost;
    std::vector<int32_t> area;
    std::vector<SplitSeries> series;
  };
  Snapshot save_region(int x, int y, int w, int h) const;
  void restore_region(const Snapshot& s);

  // Writes a reconstructed leaf block and its bookkeeping planes.
  void commit_leaf(int x, int y, const Grid<uint8_t>& block, const LeafCost& lc, int qt_depth,
                   const SplitSeries& path);
};

// DC prediction: mean of available reconstructed samples in the row above and
// the column left of the block, rounded to nearest; 128 when none available.
// ctu_origin maps cu's CTU-relative coordinates into the frame.
Grid<uint8_t> predict_intra(const Frame& f, const CuRect& cu, const ReconState& rs,
                            Point ctu_origin = {});

// Orthonormal 2-D DCT-II and its inverse (inverse rounds to integers).
Grid<double> forward_dct(const Grid<int16_t>& residual);
Grid<int16_t> inverse_dct(const Grid<double>& coeff);
Grid<int32_t> quantize(const Grid<double>& coeff, int qp);  // round(c / Qstep)
Grid<double> dequantize(const Grid<int32_t>& qcoeff, int qp);

struct TransformOutcome {
  Grid<int32_t> qcoeff;
  Grid<int16_t> residual_recon;  // dequantized + inverse transformed, rounded
};
// Forward DCT + uniform quantization of a residual block, plus the decoder-side
// residual reconstruction.
TransformOutcome transform_quantize(const Grid<int16_t>& residual, int qp);

// Rate proxy: kNsFlagBits + per-coefficient charge (0.5 bits for zeros,
// 1 + 2*log2(1+|c|) otherwise).
double coeff_rate_bits(const Grid<int32_t>& qcoeff);

struct LeafEval {
  LeafCost cost;
  Grid<uint8_t> recon;  // clipped reconstruction, cu-sized
};
// Rate/distortion/cost of coding `cu` as a leaf against the current recon
// state.  Pure: nothing is committed; the caller decides.
LeafEval leaf_rd_cost(const Frame& f, const CuRect& cu, int qp, const ReconState& rs,
                      Point ctu_origin = {});

// Bits to signal one decision out of `legal`: a fixed-length code, so
// ceil(log2 |legal|) when |legal| > 1, else 0.
double split_signal_bits(const SplitModeSet& legal);

// Lambda-weighted signaling cost of choosing `mode` at `cu`.  Every choice in
// the legal set is charged equally (fixed-length code).
double split_signal_cost(const CuRect& cu, SplitMode mode, const SplitModeSet& legal, int qp);

}  // namespace qtmtt
