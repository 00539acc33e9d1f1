#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "qtmtt/agent.hpp"
#include "qtmtt/frame.hpp"

namespace qtmtt {

inline constexpr std::array<int, 4> kMetricQps = {22, 27, 32, 37};

struct QpMeasurement {
  uint64_t cu_reconstructions = 0;
  uint64_t pixel_reconstructions = 0;
  double wall_time = 0.0;   // seconds; modeled time unless explicitly measured
  double total_rate = 0.0;  // bits
  double psnr = 0.0;        // dB
};

// One measurement per QP in kMetricQps order.
struct QpSeriesMeasurement {
  std::array<QpMeasurement, 4> by_qp{};

  QpMeasurement& at_qp(int qp);
  const QpMeasurement& at_qp(int qp) const;
  // Rate should fall as QP rises on the same content; returns false (and
  // explains on `warn`) when it does not.  A sanity check, not an error.
  bool rate_monotone_sane(std::ostream* warn = nullptr) const;
};

// Mean over the four QPs of (anchor - test)/anchor, as a percentage.
// Exact rational arithmetic (one rounding at output); throws ConfigError on a
// zero anchor entry.
double cu_reduction(const QpSeriesMeasurement& test, const QpSeriesMeasurement& anchor);
double pixel_reduction(const QpSeriesMeasurement& test, const QpSeriesMeasurement& anchor);
double et_reduction(const QpSeriesMeasurement& test, const QpSeriesMeasurement& anchor);

// Raw work ratios test/anchor in percent (complement of the reductions above;
// reports expose both).
double cu_ratio_raw(const QpSeriesMeasurement& test, const QpSeriesMeasurement& anchor);
double pixel_ratio_raw(const QpSeriesMeasurement& test, const QpSeriesMeasurement& anchor);

// 10*log10(255^2 / MSE), capped at 100 dB (also the MSE=0 sentinel).
double psnr_db(double mse);
double psnr(const Frame& original, const Frame& recon);

struct RdPoint {
  double rate = 0.0;  // bits (any consistent unit)
  double psnr = 0.0;  // dB
};

// Bjontegaard delta rate of `test` against `anchor`, in percent.  Monotone
// piecewise-cubic interpolation of ln(rate) over PSNR, averaged over the
// common PSNR interval.  Throws NumericError on non-monotone curves or empty
// overlap.
double bd_rate(std::span<const RdPoint> test, std::span<const RdPoint> anchor);

struct TradeoffPoint {
  std::string label;
  int topn = 0;  // 0 when the selector has no N/T notion (blank CSV cells)
  double threshold = 1.0;
  double bd_rate_percent = 0.0;
  double et_percent = 0.0;
  double pixel_ratio_percent = 0.0;  // reduction vs anchor (see ratio fields)
  double cu_ratio_percent = 0.0;
  double pixel_ratio_raw_percent = 100.0;  // plain test/anchor percentages
  double cu_ratio_raw_percent = 100.0;
};

// Pinned schema: label,N,T,bd_rate_pct,et_pct,pixel_ratio_pct,cu_ratio_pct
// with RFC-4180 quoting and one header row.
std::string tradeoff_csv(std::span<const TradeoffPoint> rows);

// Encodes the corpus once per selector config and once for the anchor, at all
// four QPs, and aggregates each config into a TradeoffPoint.  Rows come back
// sorted by pixel_ratio_percent; a failing row is reported to `row_errors`
// and skipped, the sweep continues.
std::vector<TradeoffPoint> pareto_sweep(const std::vector<NamedFrame>& corpus,
                                        std::span<const SelectorSpec> configs,
                                        const PartitionConstraints& c, const SelectorSpec& anchor,
                                        const QNetwork* net, bool modeled_time = true,
                                        std::ostream* row_errors = nullptr);

}  // namespace qtmtt
