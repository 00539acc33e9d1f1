#pragma once

#include <vector>

#include "qtmtt/agent.hpp"
#include "qtmtt/frame.hpp"
#include "qtmtt/metrics.hpp"
#include "qtmtt/partition.hpp"
#include "qtmtt/rdo_search.hpp"

namespace qtmtt {

struct FrameEncodeReport {
  RdStats stats;
  double rate_bits = 0.0;
  double psnr_db = 0.0;  // vs the (padded) input
  Frame recon;
  std::vector<PartitionTree> ctu_trees;  // raster CTU order
};

// Encodes one frame CTU by CTU in raster order.  The frame must already be
// padded to a CTU multiple.  open_loop restricts prediction to within each
// CTU (no cross-CTU neighbors), which makes CTUs independent.
FrameEncodeReport encode_frame(const Frame& f, int qp, const PartitionConstraints& c,
                               const SplitSelector& selector, bool open_loop = false,
                               SearchObserver* observer = nullptr);

// Encodes the whole corpus at the four metric QPs with one selector and
// aggregates counters, rate, modeled/measured time, and corpus PSNR per QP.
QpSeriesMeasurement measure_series(const std::vector<NamedFrame>& corpus,
                                   const PartitionConstraints& c, const SplitSelector& selector,
                                   bool modeled_time = true, int jobs = 1);

}  // namespace qtmtt
