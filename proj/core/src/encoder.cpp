#include "qtmtt/encoder.hpp"

#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include "qtmtt/errors.hpp"

namespace qtmtt {

FrameEncodeReport encode_frame(const Frame& f, int qp, const PartitionConstraints& c,
                               const SplitSelector& selector, bool open_loop, SearchObserver* observer) {
  c.validate();
  if (f.width() <= 0 || f.height() <= 0) throw ConfigError("empty frame");
  if (f.width() % c.ctu_size != 0 || f.height() % c.ctu_size != 0)
    throw ConfigError("frame dimensions must be a multiple of the ctu size (pad first)");

  FrameEncodeReport rep;
  rep.recon.luma = Grid<uint8_t>(f.width(), f.height());
  ReconState rs(f.width(), f.height());

  const CuRect root{0, 0, c.ctu_size, c.ctu_size, 0, 0, false};
  for (int ty = 0; ty < f.height(); ty += c.ctu_size) {
    for (int tx = 0; tx < f.width(); tx += c.ctu_size) {
      const Point origin{tx, ty};
      SearchResult r;
      if (open_loop) {
        // Each CTU predicts only from inside itself; neighbours stay uncovered.
        ReconState local(f.width(), f.height());
        r = search(f, root, qp, c, selector, local, origin, observer);
        rs.restore_region(local.save_region(tx, ty, c.ctu_size, c.ctu_size));
      } else {
        r = search(f, root, qp, c, selector, rs, origin, observer);
      }
      rep.stats += r.stats;
      rep.rate_bits += r.rate_bits;
      rep.ctu_trees.push_back(std::move(r.tree));
    }
  }
  rep.recon.luma = rs.recon;
  rep.psnr_db = psnr(f, rep.recon);
  return rep;
}

namespace {

struct FrameCell {
  RdStats stats;
  double rate_bits = 0.0;
  double sse = 0.0;
  uint64_t window_pixels = 0;
};

FrameCell measure_one(const NamedFrame& nf, int qp, const PartitionConstraints& c,
                      const SplitSelector& selector) {
  const int ow = nf.frame.width(), oh = nf.frame.height();
  const Frame padded = pad_to_multiple(nf.frame, c.ctu_size);
  const FrameEncodeReport rep = encode_frame(padded, qp, c, selector, false, nullptr);
  FrameCell cell;
  cell.stats = rep.stats;
  cell.rate_bits = rep.rate_bits;
  // Quality is judged on the original window, not the replicated padding.
  cell.sse = region_mse(nf.frame.luma, rep.recon.luma, ow, oh) * double(ow) * double(oh);
  cell.window_pixels = uint64_t(ow) * uint64_t(oh);
  return cell;
}

}  // namespace

QpSeriesMeasurement measure_series(const std::vector<NamedFrame>& corpus,
                                   const PartitionConstraints& c, const SplitSelector& selector,
                                   bool modeled_time, int jobs) {
  if (corpus.empty()) throw ConfigError("empty corpus");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");

  QpSeriesMeasurement out;
  for (size_t qi = 0; qi < kMetricQps.size(); ++qi) {
    const int qp = kMetricQps[qi];
    std::vector<FrameCell> cells(corpus.size());
    if (jobs == 1) {
      for (size_t fi = 0; fi < corpus.size(); ++fi)
        cells[fi] = measure_one(corpus[fi], qp, c, selector);
    } else {
      std::atomic<size_t> next{0};
      std::vector<std::thread> pool;
      const int n = std::min<int>(jobs, int(corpus.size()));
      for (int t = 0; t < n; ++t) {
        pool.emplace_back([&] {
          for (size_t fi = next.fetch_add(1); fi < corpus.size(); fi = next.fetch_add(1))
            cells[fi] = measure_one(corpus[fi], qp, c, selector);
        });
      }
      for (std::thread& t : pool) t.join();
    }

    QpMeasurement& m = out.by_qp[qi];
    double sse = 0.0;
    uint64_t pixels = 0;
    for (const FrameCell& cell : cells) {  // fixed order: identical sums at any job count
      m.cu_reconstructions += cell.stats.cu_reconstructions;
      m.pixel_reconstructions += cell.stats.pixel_reconstructions;
      m.total_rate += cell.rate_bits;
      m.wall_time += cell.stats.wall_seconds;
      sse += cell.sse;
      pixels += cell.window_pixels;
    }
    if (modeled_time) {
      RdStats agg;
      for (const FrameCell& cell : cells) agg += cell.stats;
      m.wall_time = agg.modeled_seconds();
    }
    m.psnr = psnr_db(sse / double(pixels));
  }
  return out;
}

}  // namespace qtmtt
